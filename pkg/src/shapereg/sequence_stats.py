"""Structural statistics of sequences that enter the risk bounds."""

from dataclasses import dataclass

import numpy as np

from .cones import (
    Antitonic,
    BlockProduct,
    ConvexOnDesign,
    DesignPoints,
    FullSpace,
    Isotonic,
    Unimodal,
    UnimodalSplit,
    as_sequence,
    is_convex_cone,
)
from .convex import affine_blocks
from .errors import InvalidArgument, UnsupportedOperation
from .kkt import convex_constraint_rows, convex_constraint_values

__all__ = [
    "PieceDecomposition",
    "RegretReport",
    "total_variation",
    "count_constant_pieces",
    "count_affine_pieces",
    "distance_to_affine",
    "r_constant",
    "is_member",
    "regrets",
    "scaled_norm",
]

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class PieceDecomposition:
    """Start indices of the blocks of a sequence and their number."""

    boundaries: tuple
    count: int

    @property
    def blocks(self):
        edges = list(self.boundaries) + [None]
        return [(edges[i], edges[i + 1]) for i in range(self.count)]

    def sizes(self, n):
        edges = list(self.boundaries) + [n]
        return [edges[i + 1] - edges[i] for i in range(self.count)]


@dataclass(frozen=True)
class RegretReport:
    """Regrets of order 1 and 2 and the distance to the projected truth.

    All three use the scaled norm ``||v||^2 = sum(v**2) / n``.
    """

    r1: float
    r2: float
    proj_dist_sq: float

    def sandwich_holds(self, tol=1e-9):
        """``r1**2 <= proj_dist_sq <= r2`` up to ``tol``."""
        return self.r1**2 <= self.proj_dist_sq + tol and self.proj_dist_sq <= self.r2 + tol


def scaled_norm(v):
    v = np.asarray(v, dtype=np.float64)
    return float(np.sqrt(np.mean(v * v)))


def total_variation(u):
    """``max(u) - min(u)``."""
    u = as_sequence(u, name="u")
    return float(u.max() - u.min())


def _threshold(u, tol):
    return tol * (1.0 + float(np.max(np.abs(u))))


def count_constant_pieces(u, tol=DEFAULT_TOL):
    """Number of maximal constant runs of ``u``.

    Consecutive entries differing by more than ``tol * (1 + ||u||_inf)``
    start a new run.
    """
    u = as_sequence(u, name="u")
    jumps = np.flatnonzero(np.abs(np.diff(u)) > _threshold(u, tol)) + 1
    boundaries = (0, *(int(j) for j in jumps))
    return PieceDecomposition(boundaries, len(boundaries))


def count_affine_pieces(u, x, tol=DEFAULT_TOL):
    """Number of maximal affine pieces of ``u`` on design ``x``.

    One plus the number of interior points where the chord through the
    two neighbours misses the point by more than ``tol * (1 + ||u||_inf)``.
    For convex ``u`` this is the smallest number of affine pieces; for
    other sequences it counts kinks of either orientation.
    """
    u = as_sequence(u, name="u")
    design = x if isinstance(x, DesignPoints) else DesignPoints(x)
    if design.n != u.size:
        raise InvalidArgument(f"len(u) = {u.size} but the design has {design.n} points")
    blocks = affine_blocks(u, design, tol)
    return PieceDecomposition(tuple(s for s, _ in blocks), len(blocks))


def distance_to_affine(u, x=None):
    """Scaled-norm distance from ``u`` to the nearest affine sequence.

    Affine is in the design abscissae when ``x`` is given, in the index
    otherwise; the nearest sequence is the ordinary least-squares line.
    """
    u = as_sequence(u, name="u")
    n = u.size
    if n <= 2:
        return 0.0
    if x is None:
        t = np.linspace(0.0, 1.0, n)
    else:
        design = x if isinstance(x, DesignPoints) else DesignPoints(x)
        if design.n != n:
            raise InvalidArgument(f"len(u) = {n} but the design has {design.n} points")
        t = design.local_coords()
    basis = np.column_stack([np.ones(n), t - t.mean()])
    coef, *_ = np.linalg.lstsq(basis, u, rcond=None)
    return scaled_norm(u - basis @ coef)


def r_constant(u, sigma, x=None):
    """``max(sigma, distance_to_affine(u))``."""
    if not sigma > 0:
        raise InvalidArgument("sigma must be positive")
    return max(float(sigma), distance_to_affine(u, x))


def _valley(u, thr):
    d = np.diff(u)
    up = np.flatnonzero(d > thr)
    down = np.flatnonzero(d < -thr)
    if up.size == 0 or down.size == 0:
        return True
    return bool(down[-1] < up[0])


def is_member(cone, u, tol=DEFAULT_TOL):
    """Whether ``u`` satisfies every defining inequality of ``cone``.

    Inequalities are tested with slack ``tol * (1 + ||u||_inf)``.
    """
    u = as_sequence(u, name="u")
    if cone.dim != u.size:
        raise InvalidArgument(f"cone dimension {cone.dim} differs from len(u) = {u.size}")
    thr = _threshold(u, tol)
    return _member(cone, u, thr)


def _member(cone, u, thr):
    if isinstance(cone, FullSpace):
        return True
    if isinstance(cone, Isotonic):
        return bool(np.all(np.diff(u) >= -thr))
    if isinstance(cone, Antitonic):
        return bool(np.all(np.diff(u) <= thr))
    if isinstance(cone, UnimodalSplit):
        m = cone.m
        return bool(np.all(np.diff(u[:m]) <= thr) and np.all(np.diff(u[m:]) >= -thr))
    if isinstance(cone, Unimodal):
        return _valley(u, thr)
    if isinstance(cone, ConvexOnDesign):
        if u.size <= 2:
            return True
        a, b = convex_constraint_rows(cone.design)
        return bool(np.all(convex_constraint_values(u, a, b) >= -thr))
    if isinstance(cone, BlockProduct):
        pos = 0
        for part in cone.parts:
            if not _member(part, u[pos : pos + part.dim], thr):
                return False
            pos += part.dim
        return True
    raise InvalidArgument(f"unknown cone {cone!r}")


def regrets(fit, mu, cone, tol=DEFAULT_TOL):
    """Regrets of ``fit`` against truth ``mu`` over a closed convex ``cone``.

    Returns ``r1 = ||fit - mu|| - ||P(mu) - mu||``,
    ``r2 = ||fit - mu||^2 - ||P(mu) - mu||^2`` and
    ``proj_dist_sq = ||fit - P(mu)||^2`` where ``P`` is the projection
    onto ``cone``; norms are scaled by ``1/n``.
    """
    from .projections import project

    if not is_convex_cone(cone):
        raise UnsupportedOperation("regrets need a convex constraint set; the unimodal union is not convex")
    fit = as_sequence(fit, name="fit")
    mu = as_sequence(mu, name="mu")
    if fit.size != mu.size:
        raise InvalidArgument("fit and mu differ in length")
    if not is_member(cone, fit, tol):
        raise InvalidArgument("fit is not feasible for the cone")
    pi = project(mu, cone).fit
    d_fit = scaled_norm(fit - mu)
    d_pi = scaled_norm(pi - mu)
    return RegretReport(
        r1=d_fit - d_pi,
        r2=d_fit**2 - d_pi**2,
        proj_dist_sq=scaled_norm(fit - pi) ** 2,
    )
