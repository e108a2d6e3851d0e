"""Right-hand sides of oracle inequalities and the localized-width fixed point.

Every evaluator takes a :class:`BoundInputs` record holding the noise
level, the deviation parameter ``x``, a candidate ``u`` and the truth
``mu``. Norms are scaled, ``||v||^2 = sum(v**2) / n``. Forms labelled
*squared* bound ``||fit - mu||^2``; the others bound ``||fit - mu||``.
Unspecified absolute constants (``c``, ``C``, ``kappa``) are arguments.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .cones import (
    ConvexOnDesign,
    DesignPoints,
    Isotonic,
    Unimodal,
    as_sequence,
    is_convex_cone,
)
from .errors import ConvergenceFailure, InvalidArgument, UnsupportedOperation
from .montecarlo import check_seed, gaussian, map_replications, mean_and_se
from .projections import project_fit
from .sequence_stats import (
    count_affine_pieces,
    count_constant_pieces,
    distance_to_affine,
    is_member,
    scaled_norm,
    total_variation,
)
from .statdim import StatDimEstimate

__all__ = [
    "BoundInputs",
    "rhs_isotonic_expectation",
    "rhs_isotonic_deviation",
    "rhs_convex",
    "rhs_convex_expectation",
    "rhs_rate23_isotonic",
    "rhs_rate23_unimodal",
    "rhs_rate23_convex",
    "rhs_rate45",
    "rhs_unimodal",
    "localized_width_mc",
    "fixed_point_tstar",
]


@dataclass(frozen=True)
class BoundInputs:
    """Ingredients shared by the oracle-inequality evaluators.

    Parameters
    ----------
    sigma : float
        Noise standard deviation. Zero is accepted as the noiseless limit.
    x_tail : float
        Deviation parameter; the bounds hold with probability ``1 - exp(-x)``.
    candidate : array-like
        Oracle point ``u``.
    mu : array-like
        Truth.
    design : DesignPoints or array-like, optional
        Abscissae for the convex bounds; equispaced when omitted.
    """

    sigma: float
    x_tail: float
    candidate: np.ndarray
    mu: np.ndarray
    design: DesignPoints | None = None
    n: int = field(init=False)

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma >= 0):
            raise InvalidArgument("sigma must be finite and nonnegative")
        if not (np.isfinite(self.x_tail) and self.x_tail >= 0):
            raise InvalidArgument("x_tail must be finite and nonnegative")
        u = as_sequence(self.candidate, name="candidate")
        mu = as_sequence(self.mu, name="mu")
        if u.size != mu.size:
            raise InvalidArgument("candidate and mu differ in length")
        object.__setattr__(self, "candidate", u)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "x_tail", float(self.x_tail))
        object.__setattr__(self, "n", u.size)
        if self.design is not None:
            d = self.design if isinstance(self.design, DesignPoints) else DesignPoints(self.design)
            if d.n != u.size:
                raise InvalidArgument("design length differs from the candidate")
            object.__setattr__(self, "design", d)

    def bias(self):
        """Scaled distance ``||u - mu||``."""
        return scaled_norm(self.candidate - self.mu)

    def resolved_design(self):
        if self.design is not None:
            return self.design
        return DesignPoints(np.arange(self.n, dtype=np.float64))


def _require(inputs, cone, label):
    if not is_member(cone, inputs.candidate):
        raise InvalidArgument(f"candidate is not {label}")


def _log_en_over(k, n):
    return 1.0 + math.log(n) - math.log(k)


def _positive(value, name):
    if not (np.isfinite(value) and value > 0):
        raise InvalidArgument(f"{name} must be positive")
    return float(value)


def rhs_isotonic_expectation(inputs):
    """Squared form, in expectation: ``||u-mu||^2 + sigma^2 k/n log(en/k)``."""
    _require(inputs, Isotonic(inputs.n), "nondecreasing")
    n, s2 = inputs.n, inputs.sigma**2
    k = count_constant_pieces(inputs.candidate).count
    return inputs.bias() ** 2 + s2 * k / n * _log_en_over(k, n)


def rhs_isotonic_deviation(inputs):
    """Squared form with probability ``1 - exp(-x)``.

    ``||u-mu||^2 + 2 sigma^2 k/n log(en/k) + 4 sigma^2 x / n``.
    """
    _require(inputs, Isotonic(inputs.n), "nondecreasing")
    n, s2 = inputs.n, inputs.sigma**2
    k = count_constant_pieces(inputs.candidate).count
    return inputs.bias() ** 2 + 2.0 * s2 * k / n * _log_en_over(k, n) + 4.0 * s2 * inputs.x_tail / n


def _affine_pieces(inputs):
    design = inputs.resolved_design()
    _require(inputs, ConvexOnDesign(design), "convex on the design")
    return count_affine_pieces(inputs.candidate, design).count


def rhs_convex(inputs):
    """Squared form for convex LS with probability ``1 - exp(-x)``.

    ``||u-mu||^2 + 16 sigma^2 q/n log(en/q) + 4 sigma^2 x / n``, valid for
    any design.
    """
    n, s2 = inputs.n, inputs.sigma**2
    q = _affine_pieces(inputs)
    return inputs.bias() ** 2 + 16.0 * s2 * q / n * _log_en_over(q, n) + 4.0 * s2 * inputs.x_tail / n


def rhs_convex_expectation(inputs):
    """Squared form in expectation: ``||u-mu||^2 + 8 sigma^2 q/n log(en/q)``.

    The rate term is the tangent-cone dimension bound divided by ``n``.
    """
    n, s2 = inputs.n, inputs.sigma**2
    q = _affine_pieces(inputs)
    return inputs.bias() ** 2 + 8.0 * s2 * q / n * _log_en_over(q, n)


def _rate23_base(sigma, v, n, power):
    # sigma * ((sigma + V) / (sigma n))**power, finite as sigma -> 0
    if sigma == 0.0:
        return 0.0
    return sigma * ((sigma + v) / (sigma * n)) ** power


def rhs_rate23_isotonic(inputs, c=1.0):
    """Squared form, ``n^(-2/3)`` rate for monotone candidates.

    ``||u-mu||^2 + 2 c sigma^2 ((sigma + V(u)) / (sigma n))^(2/3) + 4 sigma^2 x / n``.
    """
    c = _positive(c, "c")
    _require(inputs, Isotonic(inputs.n), "nondecreasing")
    n, sigma = inputs.n, inputs.sigma
    v = total_variation(inputs.candidate)
    rate = 2.0 * c * sigma * _rate23_base(sigma, v, n, 2.0 / 3.0)
    return inputs.bias() ** 2 + rate + 4.0 * sigma**2 * inputs.x_tail / n


def _rate23_norm_form(inputs, c):
    c = _positive(c, "c")
    _require(inputs, Unimodal(inputs.n), "valley shaped")
    n, sigma = inputs.n, inputs.sigma
    v = total_variation(inputs.candidate)
    rate = 2.0 * c * _rate23_base(sigma, v, n, 1.0 / 3.0)
    tail = 2.0 * (2.0 + math.sqrt(2.0)) * sigma * math.sqrt(inputs.x_tail + 1.0 + math.log(n)) / math.sqrt(n)
    return inputs.bias() + rate + tail


def rhs_rate23_unimodal(inputs, c=1.0):
    """Norm form for unimodal LS and a valley-shaped candidate.

    ``||u-mu|| + 2 c sigma ((sigma + V(u)) / (sigma n))^(1/3)
    + 2 (2 + sqrt 2) sigma sqrt(x + log(en)) / sqrt(n)``.
    """
    return _rate23_norm_form(inputs, c)


def rhs_rate23_convex(inputs, c=1.0):
    """Norm form for convex LS on any design; same shape as the unimodal one.

    The candidate ranges over valley-shaped sequences, not only convex ones.
    """
    return _rate23_norm_form(inputs, c)


def _is_equispaced(design, tol=1e-9):
    if design.n <= 2:
        return True
    return bool(np.all(np.abs(design.gap_ratios() - 1.0) <= tol))


def rhs_rate45(inputs, C=1.0, kappa=1.0):
    """Squared form, ``n^(-4/5)`` rate for convex LS on an equispaced design.

    ``||u-mu||^2 + C (R_u sigma^4)^(2/5) log(en) / n^(4/5) + 16 sigma^2 x / n``
    with ``R_u = max(sigma, distance from u to affine sequences)``.

    Returns
    -------
    float or None
        ``None`` when ``n R_u^2 < kappa log(en)^(5/4)``; such candidates
        are excluded from the minimum.
    """
    C = _positive(C, "C")
    kappa = _positive(kappa, "kappa")
    design = inputs.resolved_design()
    if not _is_equispaced(design):
        raise InvalidArgument("the n^(-4/5) bound needs an equispaced design")
    _require(inputs, ConvexOnDesign(design), "convex on the design")
    n, sigma = inputs.n, inputs.sigma
    log_en = 1.0 + math.log(n)
    r_u = max(sigma, distance_to_affine(inputs.candidate))
    if n * r_u**2 < kappa * log_en**1.25:
        return None
    rate = C * (r_u * sigma**4) ** 0.4 * log_en / n**0.8
    return inputs.bias() ** 2 + rate + 16.0 * sigma**2 * inputs.x_tail / n


def rhs_unimodal(inputs):
    """Norm form for unimodal LS with probability ``1 - exp(-x)``.

    ``||u-mu|| + 2 sigma / sqrt(n) (sqrt((k+1) log(en/(k+1))) + sqrt(2 (x + log n)))``.
    """
    _require(inputs, Unimodal(inputs.n), "valley shaped")
    n, sigma = inputs.n, inputs.sigma
    k = count_constant_pieces(inputs.candidate).count
    pieces = (k + 1) * _log_en_over(k + 1, n)
    return inputs.bias() + 2.0 * sigma / math.sqrt(n) * (
        math.sqrt(pieces) + math.sqrt(2.0 * (inputs.x_tail + math.log(n)))
    )


def _width_one(cone, u, xi, t, lam_lo, lam_hi, max_steps=200):
    """``max xi^T w`` over ``u + w`` in ``cone`` with ``||w|| <= t``.

    The maximizer is ``w(lam) = P(u + xi / (2 lam)) - u`` for the ball
    multiplier ``lam``; ``||w(lam)||`` is nonincreasing, so ``lam`` is
    found by bisection on a log scale.
    """

    def w_of(lam):
        w = project_fit(u + xi / (2.0 * lam), cone) - u
        return w, float(np.sqrt(w @ w))

    w, norm = w_of(lam_lo)
    if norm <= t:
        # ball constraint inactive at the loosest multiplier
        return float(xi @ w)
    w_hi, norm_hi = w_of(lam_hi)
    if norm_hi > t:
        raise ConvergenceFailure(
            f"ball multiplier bracket [{lam_lo:g}, {lam_hi:g}] does not reach radius {t:g}",
            residuals={"norm_at_upper": norm_hi},
        )
    lo, hi = math.log(lam_lo), math.log(lam_hi)
    norm_lo = norm
    slack = 1e-9 * (1.0 + t)
    for _ in range(max_steps):
        mid = 0.5 * (lo + hi)
        w_mid, norm_mid = w_of(math.exp(mid))
        if norm_mid > norm_lo + slack or norm_mid < norm_hi - slack:
            raise ConvergenceFailure(
                "norm of the localized maximizer is not monotone in the multiplier",
                residuals={"lower": norm_lo, "middle": norm_mid, "upper": norm_hi},
            )
        if norm_mid > t:
            lo, norm_lo = mid, norm_mid
        else:
            hi, w_hi, norm_hi = mid, w_mid, norm_mid
        if hi - lo <= 1e-13 * max(1.0, abs(hi)):
            break
    return float(xi @ w_hi)


def localized_width_mc(cone, u, t, sigma, reps=200, seed=0, threads=None):
    """Monte-Carlo localized Gaussian width around ``u``.

    Estimates ``E sup { xi^T (v - u) : v in cone, ||v - u|| <= t }`` for
    ``xi ~ N(0, sigma^2 I)`` with Euclidean ``||.||``.

    Parameters
    ----------
    cone : convex cone description
    u : array-like
        Centre, must lie in ``cone``.
    t : float
        Radius, positive.
    sigma : float
        Noise level, nonnegative.
    reps, seed : int
        Replication ``r`` draws from the Gaussian stream ``(seed, r)``.

    Raises
    ------
    ConvergenceFailure
        When the multiplier bracket ``[1e-12, 1e12]`` misses radius ``t``.
    """
    if not is_convex_cone(cone):
        raise UnsupportedOperation("localized widths are defined here for convex cones only")
    u = as_sequence(u, name="u")
    if cone.dim != u.size:
        raise InvalidArgument("cone dimension differs from len(u)")
    if not is_member(cone, u):
        raise InvalidArgument("u is not in the cone")
    t = _positive(t, "t")
    if not (np.isfinite(sigma) and sigma >= 0):
        raise InvalidArgument("sigma must be finite and nonnegative")
    if isinstance(reps, bool) or not isinstance(reps, (int, np.integer)) or reps < 1:
        raise InvalidArgument("reps must be a positive integer")
    seed = check_seed(seed)
    n = u.size
    base = np.array(u)

    def one(r):
        xi = sigma * gaussian(seed, r, n, "width")
        if sigma == 0.0:
            return 0.0
        return _width_one(cone, base, xi, t, 1e-12, 1e12)

    mean, se = mean_and_se(map_replications(one, int(reps), threads))
    return StatDimEstimate(mean, se, int(reps), seed)


def fixed_point_tstar(cone, u, sigma, reps=200, seed=0, iterations=40, guard=2.0, threads=None):
    """Smallest radius ``t`` with localized width at most ``t^2 / 2``.

    Bisection over ``[1e-6 sigma, 1e3 sigma sqrt(n)]``. A radius passes
    when the width estimate plus ``guard`` standard errors is at most
    ``t^2 / 2``; the same Gaussian draws are used at every radius, so the
    pass/fail pattern is monotone in ``t``.

    Raises
    ------
    ConvergenceFailure
        When even the upper end of the bracket fails.
    """
    sigma = _positive(sigma, "sigma")
    u = as_sequence(u, name="u")
    n = u.size
    lo, hi = 1e-6 * sigma, 1e3 * sigma * math.sqrt(n)

    def passes(t):
        est = localized_width_mc(cone, u, t, sigma, reps, seed, threads)
        return est.mean + guard * est.std_error <= 0.5 * t * t, est

    ok, est = passes(hi)
    if not ok:
        raise ConvergenceFailure(
            f"no fixed point below t = {hi:g}",
            residuals={"width": est.mean, "std_error": est.std_error, "half_t_squared": 0.5 * hi * hi},
        )
    if passes(lo)[0]:
        return lo
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if passes(mid)[0]:
            hi = mid
        else:
            lo = mid
    return hi
