"""Simulation harness: designs, truths, Monte-Carlo risks and rate fits."""

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats
from scipy.optimize import nnls

from .cones import (
    Antitonic,
    ConvexOnDesign,
    DesignPoints,
    Isotonic,
    Unimodal,
    as_sequence,
)
from .convex import project_convex, project_convex_dykstra
from .errors import ConvergenceFailure, InvalidArgument
from .montecarlo import check_seed, gaussian, map_replications, mean_and_se, uniform
from .projections import project_block_product, project_fit
from .risk_bounds import BoundInputs, rhs_convex_expectation, rhs_isotonic_expectation, rhs_unimodal
from .sequence_stats import count_constant_pieces, is_member
from .statdim import StatDimEstimate, statdim_tangent_isotonic_exact

__all__ = [
    "design_equispaced",
    "design_geometric",
    "design_uniform",
    "worst_case_eps",
    "worst_case_design_for",
    "make_truth",
    "TRUTH_FAMILIES",
    "ExperimentConfig",
    "RiskEstimate",
    "RateFit",
    "OracleReport",
    "TangentReport",
    "ExperimentResult",
    "build_design",
    "build_cone",
    "risk_mc",
    "oracle_check",
    "fit_power_law",
    "rate_fit",
    "run_experiment",
    "tangent_decomposition_check",
    "rhs_unimodal_expectation",
    "objective_gap_unimodal_convex",
]

ESTIMATORS = ("isotonic", "antitonic", "unimodal", "convex")

# ---------------------------------------------------------------- designs


def _check_n(n):
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidArgument(f"n must be a positive integer, got {n!r}")
    return int(n)


def design_equispaced(n, a=0.0, b=1.0):
    """``x_i = a + (i - 1)(b - a)/(n - 1)``; a single point sits at ``a``."""
    n = _check_n(n)
    if not a < b:
        raise InvalidArgument("need a < b")
    if n == 1:
        return DesignPoints([a])
    return DesignPoints(np.linspace(a, b, n))


def design_geometric(n, eps):
    """``x_i = -eps**i`` for ``i = 1..n``.

    Built from the gaps ``eps**i (1 - eps)`` so that long designs stay
    exact even where ``eps**i`` underflows.
    """
    n = _check_n(n)
    if not 0.0 < eps < 1.0:
        raise InvalidArgument("eps must lie in (0, 1)")
    i = np.arange(1, n)
    log_gaps = i * math.log(eps) + math.log1p(-eps)
    x = -np.power(eps, np.arange(1, n + 1, dtype=np.float64))
    return DesignPoints.from_log_gaps(log_gaps, x)


def design_uniform(n, seed=0):
    """Sorted uniform draws on ``(0, 1)``, seeded; ties are redrawn."""
    n = _check_n(n)
    seed = check_seed(seed)
    for attempt in range(100):
        x = np.sort(uniform(seed, attempt, n, "design", n))
        if np.all(np.diff(x) > 0):
            return DesignPoints(x)
    raise InvalidArgument("could not draw distinct design points")  # pragma: no cover


def worst_case_eps(mu):
    """``min(1/2, min_i (mu_{i+1} - mu_i) / (mu_i - mu_{i-1}))``."""
    mu = as_sequence(mu, name="mu")
    d = np.diff(mu)
    if np.any(d <= 0):
        raise InvalidArgument("mu must be strictly increasing")
    if d.size < 2:
        return 0.5
    return float(min(0.5, np.min(d[1:] / d[:-1])))


def worst_case_design_for(mu):
    """Geometric design ``x_i = -eps**i`` on which ``mu`` is convex.

    With ``eps`` from :func:`worst_case_eps`, every slope ratio of ``mu``
    on this design is at least one.
    """
    mu = as_sequence(mu, name="mu")
    design = design_geometric(mu.size, worst_case_eps(mu))
    if not is_member(ConvexOnDesign(design), mu):
        raise InvalidArgument("mu is not convex on its worst-case design (increments too small)")
    return design


def build_design(spec, n, truth=None):
    """Design from a config entry such as ``{"kind": "geometric", "eps": 0.5}``.

    Kinds: ``equispaced`` (optional ``a``, ``b``), ``geometric`` (``eps``),
    ``uniform`` (``seed``) and ``worst_case``, which needs the truth.
    """
    spec = dict(spec or {"kind": "equispaced"})
    kind = spec.pop("kind", "equispaced")
    if kind == "equispaced":
        return design_equispaced(n, spec.get("a", 0.0), spec.get("b", 1.0))
    if kind == "geometric":
        return design_geometric(n, spec["eps"])
    if kind == "uniform":
        return design_uniform(n, spec.get("seed", 0))
    if kind == "worst_case":
        if truth is None:
            raise InvalidArgument("a worst-case design needs the truth")
        return worst_case_design_for(truth)
    raise InvalidArgument(f"unknown design kind {kind!r}")


# ----------------------------------------------------------------- truths


def _coords(n, design):
    if design is None or n == 1:
        return np.linspace(0.0, 1.0, n) if n > 1 else np.zeros(1)
    return design.local_coords()


def _constant(n, design=None, level=0.0):
    return np.full(n, float(level))


def _steps(n, design=None, k=3, height=1.0):
    # k equal-width constant pieces rising by height/(k-1) each
    if k < 1 or k > n:
        raise InvalidArgument("need 1 <= k <= n")
    piece = np.floor(np.arange(n) * k / n)
    return height * piece / max(k - 1, 1)


def _linear(n, design=None, v=1.0):
    return v * _coords(n, design)


def _quadratic(n, design=None, scale=1.0, center=0.5):
    t = _coords(n, design)
    return scale * (t - center) ** 2


def _exp_increments(n, design=None, v=1.0, rate=1.0):
    # increments proportional to exp(rate * i / (n - 2)); total rise v
    if n == 1:
        return np.zeros(1)
    inc = np.exp(rate * np.arange(n - 1) / max(n - 2, 1))
    return v * np.concatenate([[0.0], np.cumsum(inc)]) / inc.sum()


TRUTH_FAMILIES = {
    "constant": _constant,
    "steps": _steps,
    "linear": _linear,
    "quadratic": _quadratic,
    "exp_increments": _exp_increments,
}


def make_truth(spec, n, design=None):
    """Truth from a config entry such as ``{"family": "steps", "k": 3}``.

    Families: ``constant`` (``level``), ``steps`` (``k``, ``height``),
    ``linear`` (``v``), ``quadratic`` (``scale``, ``center``) and
    ``exp_increments`` (``v``, ``rate``). Positions are taken on
    ``design`` when one is given, on ``[0, 1]`` otherwise.
    """
    spec = dict(spec)
    family = spec.pop("family")
    if family not in TRUTH_FAMILIES:
        raise InvalidArgument(f"unknown truth family {family!r}")
    return TRUTH_FAMILIES[family](_check_n(n), design, **spec)


# ---------------------------------------------------------------- configs


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte-Carlo experiment over a grid of sample sizes."""

    estimator: str
    truth: dict
    sigma: float
    n_grid: tuple
    reps: int
    seed: int = 0
    design: dict = field(default_factory=lambda: {"kind": "equispaced"})

    def __post_init__(self):
        if self.estimator not in ESTIMATORS:
            raise InvalidArgument(f"estimator must be one of {ESTIMATORS}")
        grid = tuple(int(v) for v in self.n_grid)
        if not grid or any(v < 1 for v in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise InvalidArgument("n_grid must be a strictly increasing list of positive integers")
        object.__setattr__(self, "n_grid", grid)
        if isinstance(self.reps, bool) or not isinstance(self.reps, (int, np.integer)) or self.reps < 2:
            raise InvalidArgument("reps must be an integer >= 2")
        if not (np.isfinite(self.sigma) and self.sigma >= 0):
            raise InvalidArgument("sigma must be finite and nonnegative")
        object.__setattr__(self, "seed", check_seed(self.seed))
        object.__setattr__(self, "truth", dict(self.truth))
        object.__setattr__(self, "design", dict(self.design))

    def to_dict(self):
        d = asdict(self)
        d["n_grid"] = list(self.n_grid)
        return d

    def setting(self, n):
        """``(cone, mu, design)`` at sample size ``n``."""
        n = _check_n(n)
        kind = self.design.get("kind", "equispaced")
        if kind == "worst_case":
            mu = make_truth(self.truth, n)
            design = worst_case_design_for(mu)
        else:
            design = build_design(self.design, n)
            mu = make_truth(self.truth, n, design if self.estimator == "convex" else None)
        return build_cone(self.estimator, n, design), mu, design


def build_cone(estimator, n, design=None):
    if estimator == "isotonic":
        return Isotonic(n)
    if estimator == "antitonic":
        return Antitonic(n)
    if estimator == "unimodal":
        return Unimodal(n)
    if estimator == "convex":
        return ConvexOnDesign(design if design is not None else design_equispaced(n))
    raise InvalidArgument(f"unknown estimator {estimator!r}")


# ------------------------------------------------------------------ risks


@dataclass(frozen=True)
class RiskEstimate:
    """Mean scaled squared error ``||fit - mu||^2`` over replications."""

    n: int
    mean_risk: float
    std_error: float
    reps: int
    seed: int
    failures: int = 0


def _fit_with_fallback(y, cone):
    """Projection with a certificate; convex failures fall back to Dykstra."""
    if not isinstance(cone, ConvexOnDesign):
        return project_fit(y, cone)
    try:
        return project_convex(y, cone.design, certify=False).fit
    except ConvergenceFailure:
        return project_convex_dykstra(y, cone.design, relaxation=1.99).fit


def risk_mc(config, n, threads=None, return_fits=False):
    """Monte-Carlo risk of the least-squares fit at sample size ``n``.

    Replication ``r`` observes ``y = mu + sigma g`` with ``g`` from the
    stream ``(seed, n, r)``. Replications whose projection fails twice are
    counted in ``failures``; more than 1% of them aborts with
    :class:`ConvergenceFailure`.
    """
    if n not in config.n_grid:
        raise InvalidArgument(f"n = {n} is not in the configured grid")
    cone, mu, _ = config.setting(n)

    def one(r):
        y = mu + config.sigma * gaussian(config.seed, r, n, "risk", n)
        try:
            fit = _fit_with_fallback(y, cone)
        except ConvergenceFailure:
            return None
        d = fit - mu
        return float(d @ d) / n, (y, fit)

    out = map_replications(one, config.reps, threads)
    risks = [o[0] for o in out if o is not None]
    failures = config.reps - len(risks)
    if failures > 0.01 * config.reps:
        raise ConvergenceFailure(f"{failures} of {config.reps} replications failed at n = {n}")
    mean, se = mean_and_se(risks)
    est = RiskEstimate(n, max(mean, 0.0), se, config.reps, config.seed, failures)
    if return_fits:
        return est, [o[1] for o in out if o is not None]
    return est


def rhs_unimodal_expectation(inputs):
    """Bound on ``E ||fit - mu||^2`` for unimodal LS by integrating the tail bound.

    The norm bound reads ``a + b sqrt(x)`` with probability ``1 - exp(-x)``,
    with ``a`` the value at ``x = 0`` and ``b = 2 sigma sqrt(2 / n)``, so the
    error is dominated by ``a + b sqrt(E)`` for ``E`` standard exponential
    and ``E (a + b sqrt(E))^2 = a^2 + a b sqrt(pi) + b^2``.
    """
    a = rhs_unimodal(BoundInputs(inputs.sigma, 0.0, inputs.candidate, inputs.mu, inputs.design))
    b = 2.0 * inputs.sigma * math.sqrt(2.0 / inputs.n)
    return a * a + a * b * math.sqrt(math.pi) + b * b


_EXPECTATION_RHS = {
    "isotonic": rhs_isotonic_expectation,
    "convex": rhs_convex_expectation,
    "unimodal": rhs_unimodal_expectation,
}


@dataclass
class OracleReport:
    """Empirical risk against the oracle right-hand side of each candidate.

    ``rows`` holds one dict per candidate with keys ``index``,
    ``feasible``, ``rhs``, ``margin`` (``rhs - mean_risk``), ``passes``
    and ``reason`` for infeasible ones.
    """

    risk: RiskEstimate
    rows: list
    best_rhs: float | None
    best_index: int | None
    passes: bool
    se_multiplier: float = 3.0


def oracle_check(config, candidates, n=None, threads=None, se_multiplier=3.0):
    """Check ``mean_risk <= RHS(u) + 3 SE`` for every candidate ``u``.

    Expectation forms are used: the monotone and convex bounds directly,
    the unimodal one integrated over its tail parameter. Infeasible
    candidates are reported, never dropped.
    """
    candidates = [as_sequence(c, name="candidate") for c in candidates]
    if not candidates:
        raise InvalidArgument("no candidates given")
    if config.estimator not in _EXPECTATION_RHS:
        raise InvalidArgument(f"no oracle bound for estimator {config.estimator!r}")
    n = candidates[0].size if n is None else n
    if any(c.size != n for c in candidates):
        raise InvalidArgument("candidates must all have length n")
    risk = risk_mc(config, n, threads)
    _, mu, design = config.setting(n)
    rhs_fn = _EXPECTATION_RHS[config.estimator]
    rows = []
    for i, c in enumerate(candidates):
        inputs = BoundInputs(config.sigma, 0.0, c, mu, design if config.estimator == "convex" else None)
        try:
            rhs = rhs_fn(inputs)
        except InvalidArgument as exc:
            rows.append({"index": i, "feasible": False, "rhs": None, "margin": None, "passes": False, "reason": str(exc)})
            continue
        margin = rhs - risk.mean_risk
        ok = risk.mean_risk <= rhs + se_multiplier * risk.std_error
        rows.append({"index": i, "feasible": True, "rhs": rhs, "margin": margin, "passes": ok, "reason": ""})
    feasible = [r for r in rows if r["feasible"]]
    if feasible:
        best = min(feasible, key=lambda r: r["rhs"])
        best_rhs, best_index = best["rhs"], best["index"]
        passes = risk.mean_risk <= best_rhs + se_multiplier * risk.std_error
    else:
        best_rhs, best_index, passes = None, None, False
    return OracleReport(risk, rows, best_rhs, best_index, passes, se_multiplier)


# ------------------------------------------------------------------ rates


@dataclass(frozen=True)
class RateFit:
    """Least-squares line ``log(risk) = intercept + slope log(n)``."""

    slope: float
    intercept: float
    r_squared: float
    slope_stderr: float = 0.0


def fit_power_law(ns, risks):
    """Fit ``risk ~ C n**slope`` on a log-log scale."""
    ns = np.asarray(ns, dtype=np.float64)
    risks = np.asarray(risks, dtype=np.float64)
    if ns.size != risks.size or ns.size < 2:
        raise InvalidArgument("need matching arrays with at least two points")
    if np.any(risks <= 0) or np.any(ns <= 0):
        raise InvalidArgument("risks and sample sizes must be positive for a log-log fit")
    res = stats.linregress(np.log(ns), np.log(risks))
    r2 = min(max(float(res.rvalue) ** 2, 0.0), 1.0)
    return RateFit(float(res.slope), float(res.intercept), r2, float(res.stderr))


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    risks: list
    rate: RateFit | None


def run_experiment(config, threads=None):
    """Risks over the whole grid, plus a rate fit when there are >= 4 sizes."""
    risks = [risk_mc(config, n, threads) for n in config.n_grid]
    rate = None
    if len(risks) >= 4 and all(r.mean_risk > 0 for r in risks):
        rate = fit_power_law([r.n for r in risks], [r.mean_risk for r in risks])
    return ExperimentResult(config, risks, rate)


def rate_fit(config, threads=None):
    """Log-log slope of the Monte-Carlo risk over ``config.n_grid``."""
    if len(config.n_grid) < 4:
        raise InvalidArgument("a rate fit needs at least four grid points")
    result = run_experiment(config, threads)
    if result.rate is None:
        raise InvalidArgument("some risks are zero; no log-log fit")
    return result.rate


# ----------------------------------------------------------- tangent cone


@dataclass
class TangentReport:
    block_sizes: list
    max_discrepancy: float
    estimate: StatDimEstimate
    exact: float

    @property
    def within_3se(self):
        return self.estimate.within(self.exact, 3.0)


def _tangent_rows(block_sizes):
    # constraints v_{i+1} - v_i >= 0 inside each block
    n = sum(block_sizes)
    rows, pos = [], 0
    for s in block_sizes:
        for i in range(pos, pos + s - 1):
            r = np.zeros(n)
            r[i], r[i + 1] = -1.0, 1.0
            rows.append(r)
        pos += s
    return np.array(rows).reshape(-1, n)


def _project_polyhedral(g, rows):
    """Projection onto ``{v : rows @ v >= 0}`` through its nonnegative dual."""
    if rows.shape[0] == 0:
        return g.copy()
    lam, _ = nnls(rows.T, -g)
    return g + rows.T @ lam


def tangent_decomposition_check(u, reps=10**4, seed=0, threads=None):
    """Tangent cone of the monotone cone at ``u``: two projections and its dimension.

    For each Gaussian draw compares the blockwise PAVA fit with a dense
    projection onto the same cone through its nonnegative dual, and
    estimates the statistical dimension for comparison with the exact
    sum of harmonic numbers.
    """
    u = as_sequence(u, name="u")
    if not is_member(Isotonic(u.size), u):
        raise InvalidArgument("u must be nondecreasing")
    sizes = count_constant_pieces(u).sizes(u.size)
    partition = []
    pos = 0
    for s in sizes:
        partition.append(((pos, pos + s), Isotonic(s)))
        pos += s
    rows = _tangent_rows(sizes)
    seed = check_seed(seed)
    n = u.size

    def one(r):
        g = gaussian(seed, r, n, "tangent")
        blockwise = project_block_product(g, partition)
        dense = _project_polyhedral(g, rows)
        return float(np.max(np.abs(blockwise - dense))), float(blockwise @ blockwise)

    out = map_replications(one, reps, threads)
    mean, se = mean_and_se([o[1] for o in out])
    return TangentReport(
        block_sizes=sizes,
        max_discrepancy=max(o[0] for o in out),
        estimate=StatDimEstimate(mean, se, reps, seed),
        exact=statdim_tangent_isotonic_exact(sizes),
    )


def objective_gap_unimodal_convex(y, design):
    """Convex LS objective minus unimodal LS objective on one dataset."""
    y = as_sequence(y)
    conv = project_convex(y, design, certify=False).fit
    uni = project_fit(y, Unimodal(y.size))
    return float(((y - conv) ** 2).sum() - ((y - uni) ** 2).sum())

