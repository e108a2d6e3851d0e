"""Monotone and valley-unimodal least-squares projections.

The monotone projections use pool-adjacent-violators (PAVA). Each block
carries its size, sum and within-block sum of squared deviations; merging
two blocks combines these exactly, so the prefix errors needed by the
unimodal search come out of a single left-to-right sweep.
"""

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


from .cones import Antitonic, Isotonic, ProjectionResult, UnimodalSplit, as_sequence
from .errors import InvalidArgument
from .kkt import kkt_report

__all__ = [
    "pava",
    "prefix_isotonic_errors",
    "project_isotonic",
    "project_antitonic",
    "project_unimodal_split",
    "project_unimodal",
]


@njit(cache=True)
def _pava_core(y):
    n = y.shape[0]
    start = np.empty(n, dtype=np.int64)
    size = np.empty(n, dtype=np.int64)
    total = np.empty(n, dtype=np.float64)
    mean = np.empty(n, dtype=np.float64)
    sse = np.empty(n, dtype=np.float64)
    # cum_sse[b] = sum of sse over blocks 0..b on the stack
    cum_sse = np.empty(n, dtype=np.float64)
    prefix_err = np.zeros(n + 1, dtype=np.float64)
    top = -1
    for i in range(n):
        top += 1
        start[top] = i
        size[top] = 1
        total[top] = y[i]
        mean[top] = y[i]
        sse[top] = 0.0
        while top > 0 and mean[top - 1] >= mean[top]:
            n1 = size[top - 1]
            n2 = size[top]
            d = mean[top - 1] - mean[top]
            sse[top - 1] = sse[top - 1] + sse[top] + d * d * (n1 * n2) / (n1 + n2)
            size[top - 1] = n1 + n2
            total[top - 1] = total[top - 1] + total[top]
            mean[top - 1] = total[top - 1] / size[top - 1]
            top -= 1
        if top == 0:
            cum_sse[0] = sse[0]
        else:
            cum_sse[top] = cum_sse[top - 1] + sse[top]
        prefix_err[i + 1] = cum_sse[top]
    k = top + 1
    return start[:k].copy(), size[:k].copy(), mean[:k].copy(), prefix_err


def pava(y):
    """Isotonic regression of ``y`` by pool-adjacent-violators.

    Returns
    -------
    fit : ndarray of shape (n,)
    blocks : list of (start, stop)
        Maximal constant runs of ``fit``; adjacent blocks with equal means
        are pooled, so consecutive block values are strictly increasing.
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    start, size, mean, _ = _pava_core(y)
    fit = np.repeat(mean, size)
    blocks = [(int(s), int(s + m)) for s, m in zip(start, size)]
    return fit, blocks


def prefix_isotonic_errors(y):
    """Residual sums of squares of the isotonic fit of every prefix.

    ``out[i]`` is ``min ||y[:i] - u||^2`` over nondecreasing ``u``;
    ``out[0] = 0``.
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    return _pava_core(y)[3]


def _finish(y, fit, blocks, cone, iterations):
    r = y - fit
    return ProjectionResult(
        fit=fit,
        objective=float(r @ r),
        blocks=blocks,
        kkt=kkt_report(y, fit, cone),
        iterations=iterations,
    )


def project_isotonic(y):
    """Project ``y`` onto the cone of nondecreasing sequences.

    Each fitted block value is the mean of ``y`` over the block.
    """
    y = as_sequence(y)
    fit, blocks = pava(y)
    return _finish(y, fit, blocks, Isotonic(y.size), len(blocks))


def project_antitonic(y):
    """Project ``y`` onto the cone of non-increasing sequences."""
    y = as_sequence(y)
    neg_fit, blocks = pava(-y)
    return _finish(y, -neg_fit, blocks, Antitonic(y.size), len(blocks))


def project_unimodal_split(y, m):
    """Antitonic fit on ``y[:m]`` concatenated with isotonic fit on ``y[m:]``.

    ``m`` counts the leading antitonic coordinates, ``0 <= m <= n``.
    """
    y = as_sequence(y)
    n = y.size
    if not isinstance(m, (int, np.integer)) or not 0 <= m <= n:
        raise InvalidArgument(f"split index must lie in 0..{n}, got {m!r}")
    m = int(m)
    parts, blocks = [], []
    if m > 0:
        left, lb = pava(-y[:m])
        parts.append(-left)
        blocks.extend(lb)
    if m < n:
        right, rb = pava(y[m:])
        parts.append(right)
        blocks.extend((a + m, b + m) for a, b in rb)
    fit = np.concatenate(parts)
    return _finish(y, fit, blocks, UnimodalSplit(n, m), len(blocks))


def _split_objectives_scan(y):
    n = y.size
    out = np.empty(n + 1)
    for m in range(n + 1):
        out[m] = project_unimodal_split(y, m).objective
    return out


def split_objectives(y, method="prefix"):
    """Objective of the best fit for every split ``m = 0..n``.

    ``method="scan"`` runs a fresh projection per split (quadratic time);
    ``method="prefix"`` reads all of them off two PAVA sweeps.
    """
    y = as_sequence(y)
    if method == "scan":
        return _split_objectives_scan(y)
    if method != "prefix":
        raise InvalidArgument(f"unknown method {method!r}")
    n = y.size
    # antitonic error on y[:m] equals isotonic error on -y[:m]
    left = prefix_isotonic_errors(-y)
    # isotonic error on y[m:] equals isotonic error on -reversed(y)[: n - m]
    right = prefix_isotonic_errors(-y[::-1])
    return left + right[::-1]


def _argmin_smallest(objectives, scale):
    best = objectives.min()
    tied = np.flatnonzero(objectives <= best + 1e-12 * scale)
    return int(tied[0])


def project_unimodal(y, method="prefix"):
    """Least-squares fit over valley-shaped sequences.

    Returns
    -------
    result : ProjectionResult
        Fit for the optimal split; ``kkt`` refers to that split's cone.
    split : int
        Number of leading antitonic coordinates. Ties between splits whose
        objectives agree to ``1e-12 * (1 + ||y||^2)`` go to the smallest.
    """
    y = as_sequence(y)
    objectives = split_objectives(y, method=method)
    m = _argmin_smallest(objectives, 1.0 + float(y @ y))
    return project_unimodal_split(y, m), m
