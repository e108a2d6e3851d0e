"""Statistical dimensions: exact values, Monte-Carlo estimates and bounds.

The statistical dimension of a closed convex cone ``K`` in ``R^n`` is
``E ||P_K(g)||^2`` for a standard Gaussian vector ``g``.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ConvergenceFailure, InvalidArgument
from .montecarlo import check_seed, gaussian, map_replications, mean_and_se
from .projections import project_fit

__all__ = [
    "StatDimEstimate",
    "harmonic_number",
    "statdim_isotonic_exact",
    "statdim_mc",
    "statdim_tangent_isotonic_exact",
    "bound_isotonic_pieces",
    "bound_convex_pieces",
    "bound_unimodal_pieces",
]


@dataclass(frozen=True)
class StatDimEstimate:
    """Monte-Carlo mean with its standard error (sample sd over sqrt(reps))."""

    mean: float
    std_error: float
    reps: int
    seed: int

    def within(self, value, k=3.0):
        """``|mean - value| <= k * std_error``."""
        return abs(self.mean - value) <= k * self.std_error


# below this size harmonic numbers are summed exactly in rationals
_EXACT_LIMIT = 1024
_table = [0.0]


def _exact_table():
    if len(_table) == 1:
        h = Fraction(0)
        for k in range(1, _EXACT_LIMIT + 1):
            h += Fraction(1, k)
            _table.append(float(h))
    return _table


def _positive_int(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
        raise InvalidArgument(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def harmonic_number(n):
    """``H_n = sum_{k<=n} 1/k`` in double precision.

    Exact rational summation up to n = 1024; above that the asymptotic
    expansion, accurate to about one ulp.
    """
    n = _positive_int(n, "n")
    if n <= _EXACT_LIMIT:
        return _exact_table()[n]
    inv = 1.0 / n
    inv2 = inv * inv
    tail = inv / 2 - inv2 / 12 + inv2 * inv2 / 120 - inv2**3 / 252
    return math.fsum([math.log(n), float(np.euler_gamma), tail])


def statdim_isotonic_exact(n):
    """Statistical dimension of the nondecreasing cone in ``R^n``: ``H_n``."""
    return harmonic_number(n)


def statdim_tangent_isotonic_exact(block_sizes):
    """Statistical dimension of a product of isotonic cones.

    The tangent cone of the nondecreasing cone at a sequence with
    constant runs of the given sizes is such a product; its dimension is
    the sum of the per-block harmonic numbers.
    """
    sizes = list(block_sizes)
    if not sizes:
        raise InvalidArgument("block_sizes must be nonempty")
    return math.fsum(harmonic_number(s) for s in sizes)


def statdim_mc(cone, reps=None, seed=0, threads=None):
    """Monte-Carlo estimate of ``E ||P_K(g)||^2``.

    Parameters
    ----------
    cone : cone description
    reps : int, optional
        Replications; default ``10**4`` for ``n <= 100``, else ``2000``.
    seed : int
        Replication ``r`` uses the Gaussian stream ``(seed, r)``, so the
        estimate does not depend on ``threads``.

    Raises
    ------
    ConvergenceFailure
        From a projection, with ``replication`` set to the failing index.
    """
    n = cone.dim
    reps = (10**4 if n <= 100 else 2000) if reps is None else _positive_int(reps, "reps")
    seed = check_seed(seed)

    def one(r):
        g = gaussian(seed, r, n, "statdim")
        try:
            p = project_fit(g, cone)
        except ConvergenceFailure as exc:
            err = ConvergenceFailure(f"replication {r}: {exc}", exc.iterate, exc.residuals)
            err.replication = r
            raise err from exc
        return float(p @ p)

    mean, se = mean_and_se(map_replications(one, reps, threads))
    return StatDimEstimate(mean, se, reps, seed)


def _check_pieces(k, n, name):
    n = _positive_int(n, "n")
    k = _positive_int(k, name)
    if k > n:
        raise InvalidArgument(f"{name} = {k} exceeds n = {n}")
    return k, n


def _k_log_en_over_k(k, n):
    # k log(e n / k) without forming e n
    return k * (1.0 + math.log(n) - math.log(k))


def bound_isotonic_pieces(k, n):
    """``k log(e n / k)`` for a monotone sequence with ``k`` constant pieces."""
    k, n = _check_pieces(k, n, "k")
    return _k_log_en_over_k(k, n)


def bound_convex_pieces(q, n):
    """``8 q log(e n / q)`` for a convex sequence with ``q`` affine pieces."""
    q, n = _check_pieces(q, n, "q")
    return 8.0 * _k_log_en_over_k(q, n)


def bound_unimodal_pieces(k, n):
    """``(k + 1) log(e n / (k + 1))`` for a valley sequence with ``k`` pieces."""
    k, n = _check_pieces(k, n, "k")
    return _k_log_en_over_k(k + 1, n)
