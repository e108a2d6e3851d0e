"""Reproducible Monte-Carlo plumbing.

Every replication owns a counter-based Philox stream addressed by
``(seed, stream, replication)``, so a replication's draws do not depend on
how many others ran before it or on which thread ran it. Gaussian
variates come from the inverse normal CDF applied to 53-bit uniforms,
which keeps them identical across numpy versions that change their
default normal samplers.
"""

import os
from functools import lru_cache
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.special import ndtri

from .errors import InvalidArgument

__all__ = ["STREAMS", "check_seed", "uniform", "gaussian", "thread_count", "map_replications", "mean_and_se"]

# purpose tags keep unrelated experiments on disjoint streams
STREAMS = {"statdim": 0, "risk": 1, "width": 2, "tangent": 3, "design": 4}

_TWO53 = float(2**53)


def check_seed(seed):
    if not isinstance(seed, (int, np.integer)) or not 0 <= int(seed) < 2**64:
        raise InvalidArgument(f"seed must be an integer in [0, 2**64), got {seed!r}")
    return int(seed)


@lru_cache(maxsize=64)
def _key(seed):
    return np.random.SeedSequence(seed).generate_state(2, dtype=np.uint64)


def uniform(seed, replication, n, stream="statdim", cell=0):
    """Uniform variates on ``(0, 1)`` from the stream ``(seed, stream, cell, replication)``.

    Each value is an odd multiple of ``2**-54``, never 0 or 1.
    """
    key = _key(check_seed(seed))
    counter = np.array([0, int(cell), int(replication), STREAMS[stream]], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key, counter=counter))
    bits = gen.integers(0, 2**53, size=n, dtype=np.uint64)
    return (bits.astype(np.float64) + 0.5) / _TWO53


def gaussian(seed, replication, n, stream="statdim", cell=0):
    """Standard normal vector of length ``n`` for one replication.

    ``cell`` separates otherwise identical streams, e.g. the sample sizes
    of one experiment grid.
    """
    return ndtri(uniform(seed, replication, n, stream, cell))


def thread_count(threads=None):
    """Worker count: explicit value, else ``SHAPEREG_THREADS``, else 1."""
    if threads is None:
        raw = os.environ.get("SHAPEREG_THREADS", "1")
        try:
            threads = int(raw)
        except ValueError:
            raise InvalidArgument(f"SHAPEREG_THREADS must be an integer, got {raw!r}") from None
    if threads < 1:
        raise InvalidArgument("thread count must be at least 1")
    return threads


def map_replications(fn, reps, threads=None):
    """``[fn(r) for r in range(reps)]``, optionally on a thread pool.

    Results are returned in replication order regardless of scheduling.
    """
    workers = min(thread_count(threads), max(reps, 1))
    if workers == 1:
        return [fn(r) for r in range(reps)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(reps)))


def mean_and_se(values):
    """Sample mean and standard error; the error is 0 for one value or equal values."""
    v = np.asarray(values, dtype=np.float64)
    if v.size < 2 or np.all(v == v[0]):
        # skips the rounding residue of a mean over identical values
        return float(v[0]) if v.size else float("nan"), 0.0
    return float(v.mean()), float(v.std(ddof=1) / np.sqrt(v.size))
