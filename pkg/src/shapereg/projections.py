"""Dispatch from a cone description to its projection routine."""

import numpy as np

from .cones import (
    Antitonic,
    BlockProduct,
    ConvexOnDesign,
    FullSpace,
    Isotonic,
    ProjectionResult,
    Unimodal,
    UnimodalSplit,
    as_sequence,
)
from .convex import project_convex
from .errors import InvalidArgument
from .isotonic import (
    _argmin_smallest,
    pava,
    project_antitonic,
    project_isotonic,
    project_unimodal,
    project_unimodal_split,
    split_objectives,
)
from .kkt import kkt_report

__all__ = ["project", "project_fit", "project_block_product", "normalize_partition"]


def project(y, cone):
    """Least-squares fit of ``y`` over ``cone``.

    For :class:`Unimodal` the fit of the best split is returned.
    """
    y = as_sequence(y)
    if cone.dim != y.size:
        raise InvalidArgument(f"cone dimension {cone.dim} differs from len(y) = {y.size}")
    if isinstance(cone, FullSpace):
        fit = y.copy()
        return ProjectionResult(fit, 0.0, [(i, i + 1) for i in range(y.size)], kkt_report(y, fit, cone), 0)
    if isinstance(cone, Isotonic):
        return project_isotonic(y)
    if isinstance(cone, Antitonic):
        return project_antitonic(y)
    if isinstance(cone, UnimodalSplit):
        return project_unimodal_split(y, cone.m)
    if isinstance(cone, Unimodal):
        return project_unimodal(y)[0]
    if isinstance(cone, ConvexOnDesign):
        return project_convex(y, cone.design)
    if isinstance(cone, BlockProduct):
        pos, fits, blocks, iters = 0, [], [], 0
        for part in cone.parts:
            res = project(y[pos : pos + part.dim], part)
            fits.append(res.fit)
            blocks.extend((s + pos, e + pos) for s, e in res.blocks)
            iters += res.iterations
            pos += part.dim
        fit = np.concatenate(fits)
        r = y - fit
        return ProjectionResult(fit, float(r @ r), blocks, kkt_report(y, fit, cone), iters)
    raise InvalidArgument(f"unknown cone {cone!r}")


def _split_fit(y, m):
    parts = []
    if m > 0:
        parts.append(-pava(-y[:m])[0])
    if m < y.size:
        parts.append(pava(y[m:])[0])
    return np.concatenate(parts)


def project_fit(y, cone):
    """Fitted sequence only, skipping certificates and input validation.

    Meant for Monte-Carlo loops over trusted arrays; the convex solver
    still verifies its multiplier certificate.
    """
    if isinstance(cone, FullSpace):
        return np.array(y, dtype=np.float64)
    if isinstance(cone, Isotonic):
        return pava(y)[0]
    if isinstance(cone, Antitonic):
        return -pava(-y)[0]
    if isinstance(cone, UnimodalSplit):
        return _split_fit(y, cone.m)
    if isinstance(cone, Unimodal):
        m = _argmin_smallest(split_objectives(y), 1.0 + float(y @ y))
        return _split_fit(y, m)
    if isinstance(cone, ConvexOnDesign):
        return project_convex(y, cone.design, certify=False).fit
    if isinstance(cone, BlockProduct):
        pos, fits = 0, []
        for part in cone.parts:
            fits.append(project_fit(y[pos : pos + part.dim], part))
            pos += part.dim
        return np.concatenate(fits)
    raise InvalidArgument(f"unknown cone {cone!r}")


def _as_run(block):
    if isinstance(block, range):
        if block.step != 1:
            raise InvalidArgument(f"block {block!r} is not a contiguous run")
        return block.start, block.stop
    if isinstance(block, tuple) and len(block) == 2 and all(isinstance(v, (int, np.integer)) for v in block):
        return int(block[0]), int(block[1])
    idx = np.asarray(block, dtype=np.int64).ravel()
    if idx.size == 0 or np.any(np.diff(idx) != 1):
        raise InvalidArgument(f"block {block!r} is not a contiguous run")
    return int(idx[0]), int(idx[-1]) + 1


def normalize_partition(partition, n):
    """Validate ``[(block, cone), ...]`` and return a :class:`BlockProduct`.

    Blocks are half-open ``(start, stop)`` pairs, ``range`` objects or
    explicit index lists; together they must tile ``range(n)`` in order.
    """
    runs = []
    for block, cone in partition:
        start, stop = _as_run(block)
        if stop - start != cone.dim:
            raise InvalidArgument(f"block ({start}, {stop}) has size {stop - start} but its cone has dimension {cone.dim}")
        runs.append((start, stop, cone))
    runs.sort(key=lambda t: t[0])
    pos = 0
    for start, stop, _ in runs:
        if start != pos:
            raise InvalidArgument(f"blocks do not partition range({n}): gap or overlap at {pos}")
        pos = stop
    if pos != n:
        raise InvalidArgument(f"blocks cover {pos} coordinates, expected {n}")
    return BlockProduct(tuple(c for _, _, c in runs))


def project_block_product(g, partition):
    """Project ``g`` onto a product of cones acting on contiguous blocks.

    The projection onto a product cone is the concatenation of the
    per-block projections.
    """
    g = as_sequence(g, name="g")
    return project(g, normalize_partition(partition, g.size)).fit
