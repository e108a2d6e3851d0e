"""Least-squares projection onto convex sequences over arbitrary designs.

Two independent solvers:

``project_convex``
    Primal active-set method. A working set of tight convexity
    constraints fixes the knots of a continuous piecewise-affine fit, and
    each working-set subproblem is a linear-spline least-squares fit with
    a tridiagonal normal matrix. Multipliers of the tight constraints come
    from a second tridiagonal solve. Terminates with an exact KKT
    certificate.

``project_convex_dykstra``
    Cyclic projections onto the ``n - 2`` halfspaces with Dykstra's
    correction terms, written in multiplier form (for halfspaces the
    correction vector of constraint ``j`` is ``lambda_j a_j``).

Constraints are used in the normalized form of
:func:`shapereg.kkt.convex_constraint_rows`, which only involves ratios
of consecutive design gaps.
"""

import numpy as np
from scipy.linalg import solve_banded, solveh_banded

try:
    from numba import njit
except ImportError:  # pragma: no cover

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


from .cones import ConvexOnDesign, DesignPoints, ProjectionResult, as_sequence
from .errors import ConvergenceFailure, InvalidArgument
from .kkt import convex_constraint_rows, convex_constraint_values, kkt_report

__all__ = ["project_convex", "project_convex_dykstra", "affine_blocks", "FEAS_TOL"]

FEAS_TOL = 1e-9


def _check_inputs(y, x):
    y = as_sequence(y)
    design = x if isinstance(x, DesignPoints) else DesignPoints(x)
    if design.n != y.size:
        raise InvalidArgument(f"len(y) = {y.size} but the design has {design.n} points")
    return y, design


def affine_blocks(u, design, tol=1e-9):
    """Maximal affine pieces of ``u`` on ``design``.

    A point is a kink when the normalized convexity constraint centred on
    it exceeds ``tol * (1 + ||u||_inf)``. Each kink closes the block
    containing it, so the number of blocks is one plus the kink count.
    """
    u = np.asarray(u, dtype=np.float64)
    n = u.size
    if n <= 2:
        return [(0, n)]
    a, b = convex_constraint_rows(design)
    c = convex_constraint_values(u, a, b)
    kinks = np.flatnonzero(np.abs(c) > tol * (1.0 + np.max(np.abs(u)))) + 1
    edges = [0, *(int(k) + 1 for k in kinks), n]
    return [(edges[i], edges[i + 1]) for i in range(len(edges) - 1)]


class _SplineSystem:
    """Linear-spline least squares with knots at a subset of the points."""

    def __init__(self, y, design):
        self.y = y
        self.n = y.size
        self.lg = np.asarray(design.log_gaps)

    def fit(self, knots):
        """Best continuous piecewise-affine fit with the given knots.

        ``knots`` is a sorted integer array containing ``0`` and ``n - 1``.
        """
        y, n, lg = self.y, self.n, self.lg
        nk = knots.size
        # segment index of every gap, and per-segment normalized positions
        seg_of_gap = np.repeat(np.arange(nk - 1), np.diff(knots))
        seg_max = np.maximum.reduceat(lg, knots[:-1])
        h = np.exp(lg - seg_max[seg_of_gap])
        csum = np.concatenate([[0.0], np.cumsum(h)])
        offset = csum[knots]
        seg_len = offset[1:] - offset[:-1]
        point_seg = np.minimum(np.searchsorted(knots, np.arange(n), side="right") - 1, nk - 2)
        w = (csum - offset[point_seg]) / seg_len[point_seg]
        w[knots[1:]] = 1.0
        w[knots[:-1]] = 0.0
        left = 1.0 - w
        # Gram matrix of hat functions: points in segment s touch knots s, s+1
        interior = np.ones(n, dtype=bool)
        interior[knots] = False
        s = point_seg
        diag = np.zeros(nk)
        off = np.zeros(nk - 1)
        rhs = np.zeros(nk)
        diag[np.arange(nk)] += 1.0
        rhs += y[knots]
        si = s[interior]
        li, wi, yi = left[interior], w[interior], y[interior]
        diag += np.bincount(si, li * li, minlength=nk) + np.bincount(si + 1, wi * wi, minlength=nk)
        off += np.bincount(si, li * wi, minlength=nk - 1)[: nk - 1]
        rhs += np.bincount(si, li * yi, minlength=nk) + np.bincount(si + 1, wi * yi, minlength=nk)
        ab = np.zeros((2, nk))
        ab[0, 1:] = off
        ab[1] = diag
        coef = solveh_banded(ab, rhs, check_finite=False)
        u = coef[s] * left + coef[s + 1] * w
        u[knots] = coef
        return u


def _multipliers(r, active, a, b):
    """Multipliers of the active constraints from ``u - y = A^T lambda``.

    Only the equations at the centre point of each active constraint are
    used; they form a tridiagonal system (one block per run of
    consecutive active constraints).
    """
    idx = np.flatnonzero(active)
    lam = np.zeros(active.size)
    if idx.size == 0:
        return lam
    k = idx.size
    consecutive = np.diff(idx) == 1
    ab = np.zeros((3, k))
    ab[1] = -1.0
    # super-diagonal: coefficient of lambda_{j+1} in equation j is a_{j+1}
    ab[0, 1:] = np.where(consecutive, a[idx[1:]], 0.0)
    # sub-diagonal: coefficient of lambda_{j-1} in equation j is b_{j-1}
    ab[2, :-1] = np.where(consecutive, b[idx[:-1]], 0.0)
    lam[idx] = solve_banded((1, 1), ab, r[idx + 1], check_finite=False)
    return lam


def _at_lambda(lam, a, b, n):
    """``A^T lambda`` for the normalized constraint matrix."""
    out = np.zeros(n)
    out[:-2] += a * lam
    out[1:-1] -= lam
    out[2:] += b * lam
    return out


def _certificate(y, u, lam, a, b):
    r = u - y
    return {
        "stationarity": float(np.max(np.abs(_at_lambda(lam, a, b, y.size) - r))),
        "feasibility": max(float(-convex_constraint_values(u, a, b).min()), 0.0),
        "dual_feasibility": max(float(-lam.min()), 0.0),
        "complementarity": float(np.max(np.abs(lam * convex_constraint_values(u, a, b)))),
    }


def project_convex(y, x, max_iter=None, tol=FEAS_TOL, certify=True):
    """Project ``y`` onto the sequences that are convex on design ``x``.

    Parameters
    ----------
    y : array-like of shape (n,)
    x : DesignPoints or array-like of shape (n,)
        Strictly increasing abscissae.
    max_iter : int, optional
        Active-set iteration cap, default ``20 * n + 100``.
    tol : float
        Feasibility and multiplier tolerance, relative to ``1 + ||y||_inf``.
    certify : bool
        Attach the generator-based :class:`KktReport` (quadratic cost).
        The multiplier certificate is checked either way.

    Returns
    -------
    ProjectionResult
        ``blocks`` are the maximal affine pieces of the fit.

    Raises
    ------
    ConvergenceFailure
        If the iteration cap is hit before the KKT conditions hold; the
        exception carries the last feasible iterate.
    """
    y, design = _check_inputs(y, x)
    n = y.size
    cone = ConvexOnDesign(design)
    if n <= 2:
        fit = y.copy()
        return ProjectionResult(fit, 0.0, [(0, n)], kkt_report(y, fit, cone) if certify else None, 0)

    a, b = convex_constraint_rows(design)
    scale = 1.0 + float(np.max(np.abs(y)))
    inner_tol = 1e-3 * tol * scale
    system = _SplineSystem(y, design)
    max_iter = 20 * n + 100 if max_iter is None else int(max_iter)

    active = np.ones(n - 2, dtype=bool)
    u = system.fit(np.array([0, n - 1]))
    solved = True
    iterations = 0
    while True:
        iterations += 1
        if iterations > max_iter:
            lam = _multipliers(u - y, active, a, b)
            raise ConvergenceFailure(
                f"active set did not converge in {max_iter} iterations",
                iterate=u,
                residuals=_certificate(y, u, lam, a, b),
            )
        if not solved:
            knots = np.concatenate([[0], np.flatnonzero(~active) + 1, [n - 1]])
            target = system.fit(knots)
            step = target - u
            c_now = convex_constraint_values(u, a, b)
            c_step = convex_constraint_values(step, a, b)
            blocking = (~active) & (c_step < 0) & (c_now + c_step < -inner_tol)
            if np.any(blocking):
                j_idx = np.flatnonzero(blocking)
                ratios = np.maximum(c_now[j_idx], 0.0) / -c_step[j_idx]
                pick = int(np.argmin(ratios))
                alpha = min(1.0, float(ratios[pick]))
                u = u + alpha * step
                active[j_idx[pick]] = True
                continue
            u = target
            solved = True
        lam = _multipliers(u - y, active, a, b)
        worst = int(np.argmin(lam))
        if lam[worst] >= -inner_tol:
            break
        active[worst] = False
        solved = False

    cert = _certificate(y, u, lam, a, b)
    fit = u
    blocks = affine_blocks(fit, design, tol)
    report = kkt_report(y, fit, cone) if certify else None
    if max(cert["feasibility"], cert["dual_feasibility"]) > tol * scale:
        raise ConvergenceFailure("active set ended without a certificate", iterate=fit, residuals=cert)
    r = y - fit
    return ProjectionResult(fit, float(r @ r), blocks, report, iterations)


@njit(cache=True)
def _hildreth_sweeps(u, lam, a, b, sweeps, omega):
    """Run ``sweeps`` cyclic passes in place; return the last pass's largest move."""
    m = lam.shape[0]
    change = 0.0
    for _ in range(sweeps):
        change = 0.0
        for j in range(m):
            norm2 = a[j] * a[j] + 1.0 + b[j] * b[j]
            c = a[j] * u[j] - u[j + 1] + b[j] * u[j + 2]
            new = lam[j] - omega * c / norm2
            if new < 0.0:
                new = 0.0
            d = new - lam[j]
            if d != 0.0:
                lam[j] = new
                u[j] += d * a[j]
                u[j + 1] -= d
                u[j + 2] += d * b[j]
                ad = abs(d) * np.sqrt(norm2)
                if ad > change:
                    change = ad
    return change


def _polish(y, support, a, b):
    """Exact projection onto the face where the constraints in ``support`` are tight.

    Returns the point and its multipliers. The Gram matrix of the tight
    rows is banded with two off-diagonals.
    """
    idx = np.flatnonzero(support)
    if idx.size == 0:
        return y.copy(), np.zeros(0)
    ai, bi = a[idx], b[idx]

    def coupling(d, lo, hi):
        # inner product of rows lo < hi whose indices differ by d
        return np.where(d == 1, -a[hi] - b[lo], np.where(d == 2, b[lo] * a[hi], 0.0))

    gram = np.zeros((3, idx.size))
    gram[2] = ai * ai + 1.0 + bi * bi
    gram[1, 1:] = coupling(np.diff(idx), idx[:-1], idx[1:])
    if idx.size > 2:
        gram[0, 2:] = coupling(idx[2:] - idx[:-2], idx[:-2], idx[2:])
    rhs = -(ai * y[idx] - y[idx + 1] + bi * y[idx + 2])
    try:
        mu = solveh_banded(gram, rhs, check_finite=False)
    except np.linalg.LinAlgError:
        return None, None
    lam = np.zeros(a.size)
    lam[idx] = mu
    return y + _at_lambda(lam, a, b, y.size), mu


def project_convex_dykstra(y, x, tol=1e-10, max_iter=None, relaxation=1.0, polish=True):
    """Projection onto convex sequences by Dykstra's alternating projections.

    Kept as an independent check on :func:`project_convex`. For halfspaces
    Dykstra's correction of constraint ``j`` is a multiple ``lambda_j`` of
    its normal, so one sweep is a cyclic pass of multiplier updates.

    Parameters
    ----------
    tol : float
        Stop when a sweep moves no multiplier term by more than ``tol`` and
        no constraint is violated by more than ``tol``.
    max_iter : int, optional
        Sweep cap, default ``100 * n**2``.
    relaxation : float in (0, 2)
        Over-relaxation of each multiplier step; ``1`` is plain Dykstra.
    polish : bool
        Every ``n`` sweeps, solve exactly on the face picked out by the
        positive multipliers and stop if that point passes the optimality
        conditions within ``tol``.

    Raises
    ------
    ConvergenceFailure
        After ``max_iter`` sweeps, carrying the last iterate.
    """
    y, design = _check_inputs(y, x)
    if not tol > 0:
        raise InvalidArgument("tol must be positive")
    if not 0.0 < relaxation < 2.0:
        raise InvalidArgument("relaxation must lie in (0, 2)")
    n = y.size
    max_iter = 100 * n * n if max_iter is None else int(max_iter)
    if max_iter < 1:
        raise InvalidArgument("max_iter must be at least 1")
    cone = ConvexOnDesign(design)
    if n <= 2:
        fit = y.copy()
        return ProjectionResult(fit, 0.0, [(0, n)], kkt_report(y, fit, cone), 1)
    a, b = convex_constraint_rows(design)
    scale = 1.0 + float(np.max(np.abs(y)))
    u = np.array(y)
    lam = np.zeros(n - 2)
    chunk = max(16, n)
    done = 0
    fit = None
    while done < max_iter:
        # a lone first sweep lets feasible input return at once
        step = 1 if done == 0 else min(chunk, max_iter - done)
        change = _hildreth_sweeps(u, lam, a, b, step, relaxation)
        done += step
        if polish:
            cand, mu = _polish(y, lam > 0.0, a, b)
            if cand is not None and (mu.size == 0 or mu.min() >= -tol * scale):
                if convex_constraint_values(cand, a, b).min() >= -tol * scale:
                    fit = cand
                    break
        if change <= tol and convex_constraint_values(u, a, b).min() >= -tol:
            fit = u
            break
    if fit is None:
        raise ConvergenceFailure(
            f"Dykstra did not converge in {max_iter} sweeps",
            iterate=u,
            residuals={"feasibility": max(float(-convex_constraint_values(u, a, b).min()), 0.0)},
        )
    r = y - fit
    return ProjectionResult(fit, float(r @ r), affine_blocks(fit, design), kkt_report(y, fit, cone), done)
