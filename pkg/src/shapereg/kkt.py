"""Generator-based optimality checks for polyhedral cone projections.

For a closed convex cone ``K`` the projection ``p`` of ``y`` is the unique
point of ``K`` with ``p^T (y - p) = 0`` and ``theta^T (y - p) <= 0`` for all
``theta`` in ``K``. For a polyhedral cone it suffices to test the second
condition on a finite generating set plus both signs of a lineality basis.
"""

import numpy as np

from .cones import (
    Antitonic,
    BlockProduct,
    ConvexOnDesign,
    FullSpace,
    Isotonic,
    KktReport,
    Unimodal,
    UnimodalSplit,
)
from .errors import InvalidArgument, UnsupportedOperation

__all__ = ["kkt_report", "convex_constraint_rows", "convex_constraint_values"]


def convex_constraint_rows(design):
    """Normalized coefficients ``(a, b)`` of the convexity constraints.

    Constraint ``j`` (centred on point ``j + 1``) reads
    ``a_j u_j - u_{j+1} + b_j u_{j+2} >= 0``: the chord through points
    ``j`` and ``j + 2`` lies above ``u_{j+1}``. ``a_j + b_j = 1``.
    """
    rho = design.gap_ratios()
    a = rho / (1.0 + rho)
    b = 1.0 / (1.0 + rho)
    return a, b


def convex_constraint_values(u, a, b):
    return a * u[:-2] - u[1:-1] + b * u[2:]


def _monotone_dual(r, increasing):
    """Largest inner product of ``r`` with a unit generator of the cone."""
    n = r.size
    if increasing:
        # suffix indicators 1{i >= k}, k = 1..n-1
        tail = np.cumsum(r[::-1])[::-1]
        sizes = n - np.arange(n)
    else:
        tail = np.cumsum(r)
        sizes = np.arange(1, n + 1)
    worst = abs(tail[0] if increasing else tail[-1]) / np.sqrt(n)
    if n > 1:
        gen = tail[1:] / np.sqrt(sizes[1:]) if increasing else tail[:-1] / np.sqrt(sizes[:-1])
        worst = max(worst, gen.max())
    return max(worst, 0.0)


def _monotone_violation(fit, increasing):
    if fit.size < 2:
        return 0.0
    d = np.diff(fit)
    v = -d if increasing else d
    return max(float(v.max()), 0.0)


def _hinge_dual(r, design, chunk=256):
    """Max over unit hinges ``(x - x_k)_+`` of their inner product with ``r``.

    Hinges are evaluated from the log-gaps with a per-row shift so that
    designs with extreme spacing neither overflow nor underflow.
    """
    n = r.size
    lg = design.log_gaps
    shift = np.maximum.accumulate(lg[::-1])[::-1]
    worst = -np.inf
    idx = np.arange(n - 1)
    for k0 in range(1, n - 1, chunk):
        ks = np.arange(k0, min(k0 + chunk, n - 1))
        # E[row, l] = h_l / exp(shift_k) for l >= k, else 0
        expo = lg[None, :] - shift[ks][:, None]
        mask = idx[None, :] >= ks[:, None]
        e = np.where(mask, np.exp(np.where(mask, expo, 0.0)), 0.0)
        vals = np.cumsum(e, axis=1)  # hinge_k evaluated at points 1..n-1
        dots = vals @ r[1:]
        norms = np.sqrt(np.einsum("ij,ij->i", vals, vals))
        worst = max(worst, float(np.max(dots / norms)))
    return worst


def _affine_basis(design):
    t = design.local_coords()
    q, _ = np.linalg.qr(np.column_stack([np.ones_like(t), t - t.mean()]))
    return q


def _parts(y, fit, cone):
    """Yield ``(dual, violation, |fit.r|, fit.r)`` per product factor."""
    n = y.size
    r = y - fit
    inner = float(fit @ r)
    if isinstance(cone, FullSpace):
        yield float(np.max(np.abs(r))), 0.0, abs(inner), inner
    elif isinstance(cone, Isotonic):
        yield _monotone_dual(r, True), _monotone_violation(fit, True), abs(inner), inner
    elif isinstance(cone, Antitonic):
        yield _monotone_dual(r, False), _monotone_violation(fit, False), abs(inner), inner
    elif isinstance(cone, UnimodalSplit):
        m = cone.m
        if m > 0:
            yield from _parts(y[:m], fit[:m], Antitonic(m))
        if m < n:
            yield from _parts(y[m:], fit[m:], Isotonic(n - m))
    elif isinstance(cone, ConvexOnDesign):
        q = _affine_basis(cone.design)
        dual = float(np.max(np.abs(q.T @ r)))
        viol = 0.0
        if n >= 3:
            dual = max(dual, _hinge_dual(r, cone.design))
            a, b = convex_constraint_rows(cone.design)
            c = convex_constraint_values(fit, a, b)
            viol = max(float(-c.min()), 0.0)
        yield max(dual, 0.0), viol, abs(inner), inner
    elif isinstance(cone, BlockProduct):
        pos = 0
        for part in cone.parts:
            d = part.dim
            yield from _parts(y[pos : pos + d], fit[pos : pos + d], part)
            pos += d
    elif isinstance(cone, Unimodal):
        raise UnsupportedOperation(
            "the unimodal set is not a convex cone; check the fit against "
            "UnimodalSplit(n, m) for its split m instead"
        )
    else:
        raise InvalidArgument(f"unknown cone {cone!r}")


def kkt_report(y, fit, cone):
    """Residuals certifying ``fit`` as the projection of ``y`` onto ``cone``.

    All residuals vanish iff ``fit`` is the projection. The stationarity
    residual is the largest positive inner product of ``y - fit`` with a
    unit generator (lineality directions in both signs); feasibility is
    the largest constraint violation; complementarity sums ``|fit^T r|``
    over the factors of a product cone.
    """
    y = np.asarray(y, dtype=np.float64)
    fit = np.asarray(fit, dtype=np.float64)
    if y.shape != fit.shape or y.ndim != 1:
        raise InvalidArgument(f"shape mismatch: y {y.shape} vs fit {fit.shape}")
    if cone.dim != y.size:
        raise InvalidArgument(f"cone dimension {cone.dim} differs from len(y) = {y.size}")
    dual = viol = comp = 0.0
    for d, v, c, _ in _parts(y, fit, cone):
        dual = max(dual, d)
        viol = max(viol, v)
        comp += c
    return KktReport(
        stationarity_residual=dual,
        feasibility_residual=viol,
        complementarity_residual=comp,
        polar_inner_product=float(fit @ y - fit @ fit),
    )
