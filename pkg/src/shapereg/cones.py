"""Domain types: sequences, design points, cone descriptions and results."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument

__all__ = [
    "as_sequence",
    "DesignPoints",
    "FullSpace",
    "Isotonic",
    "Antitonic",
    "UnimodalSplit",
    "Unimodal",
    "ConvexOnDesign",
    "BlockProduct",
    "KktReport",
    "ProjectionResult",
]


def as_sequence(values, name="y"):
    """Validate ``values`` as a finite, nonempty 1-D float array.

    The returned array is a read-only copy so its length and entries
    cannot change after construction.
    """
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise InvalidArgument(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise InvalidArgument(f"{name} must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgument(f"{name} contains non-finite entries")
    arr.flags.writeable = False
    return arr


class DesignPoints:
    """Strictly increasing abscissae ``x_1 < ... < x_n``.

    The geometry is carried by the logarithms of the consecutive gaps,
    which stay representable for geometric designs whose abscissae
    underflow double precision (``x_i = -eps**i`` with ``n`` in the
    thousands). Every solver in the package reads the gaps, never the raw
    abscissae.

    Parameters
    ----------
    x : array-like of shape (n,)
        Abscissae. Must be finite and strictly increasing.
    """

    def __init__(self, x):
        x = as_sequence(x, name="x")
        gaps = np.diff(x)
        if np.any(gaps <= 0):
            raise InvalidArgument("design points must be strictly increasing")
        self._x = x
        lg = np.log(gaps)
        lg.flags.writeable = False
        self._log_gaps = lg

    @classmethod
    def from_log_gaps(cls, log_gaps, x=None):
        """Build a design from log-gaps, optionally with display abscissae.

        ``x`` is kept for reporting only; it may have lost resolution.
        """
        lg = np.array(log_gaps, dtype=np.float64, copy=True).ravel()
        if not np.all(np.isfinite(lg)):
            raise InvalidArgument("log gaps must be finite")
        self = cls.__new__(cls)
        if x is None:
            x = np.concatenate([[0.0], np.cumsum(np.exp(lg))])
        x = np.array(x, dtype=np.float64, copy=True)
        if x.shape != (lg.size + 1,):
            raise InvalidArgument("abscissae and log gaps disagree in length")
        x.flags.writeable = False
        lg.flags.writeable = False
        self._x = x
        self._log_gaps = lg
        return self

    @property
    def n(self):
        return self._x.size

    @property
    def x(self):
        return self._x

    @property
    def log_gaps(self):
        return self._log_gaps

    def gap_ratios(self):
        """Ratios ``(x_{i+2} - x_{i+1}) / (x_{i+1} - x_i)``, length n-2."""
        return np.exp(np.diff(self._log_gaps))

    def local_coords(self, start=0, stop=None):
        """Positions of ``x[start:stop]`` mapped affinely onto ``[0, 1]``.

        Affine-in-x sequences on the run are exactly the affine functions
        of these coordinates. A run of a single point maps to ``[0]``.
        """
        stop = self.n if stop is None else stop
        if stop - start <= 1:
            return np.zeros(max(stop - start, 0))
        lg = self._log_gaps[start : stop - 1]
        h = np.exp(lg - lg.max())
        c = np.concatenate([[0.0], np.cumsum(h)])
        return c / c[-1]

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, DesignPoints):
            return NotImplemented
        return self.n == other.n and np.array_equal(self._log_gaps, other._log_gaps)

    def __hash__(self):
        return hash(self._log_gaps.tobytes())

    def __repr__(self):
        return f"DesignPoints(n={self.n})"


def _check_dim(n):
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidArgument(f"dimension must be a positive integer, got {n!r}")
    return int(n)


@dataclass(frozen=True)
class FullSpace:
    """The whole of R^n (no constraint)."""

    n: int

    def __post_init__(self):
        object.__setattr__(self, "n", _check_dim(self.n))

    @property
    def dim(self):
        return self.n


@dataclass(frozen=True)
class Isotonic:
    """Nondecreasing sequences of length ``n``."""

    n: int

    def __post_init__(self):
        object.__setattr__(self, "n", _check_dim(self.n))

    @property
    def dim(self):
        return self.n


@dataclass(frozen=True)
class Antitonic:
    """Non-increasing sequences of length ``n``."""

    n: int

    def __post_init__(self):
        object.__setattr__(self, "n", _check_dim(self.n))

    @property
    def dim(self):
        return self.n


@dataclass(frozen=True)
class UnimodalSplit:
    """Antitonic on the first ``m`` coordinates, isotonic on the rest.

    The two chains are not linked; the union over ``m = 0..n`` is the set
    of valley-shaped sequences.
    """

    n: int
    m: int

    def __post_init__(self):
        object.__setattr__(self, "n", _check_dim(self.n))
        if not isinstance(self.m, (int, np.integer)) or not 0 <= self.m <= self.n:
            raise InvalidArgument(f"split index must lie in 0..{self.n}, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))

    @property
    def dim(self):
        return self.n


@dataclass(frozen=True)
class Unimodal:
    """Valley-shaped sequences: non-increasing then nondecreasing.

    This set is a finite union of convex cones and is not itself convex.
    """

    n: int

    def __post_init__(self):
        object.__setattr__(self, "n", _check_dim(self.n))

    @property
    def dim(self):
        return self.n


@dataclass(frozen=True)
class ConvexOnDesign:
    """Sequences with nondecreasing divided differences on ``design``."""

    design: DesignPoints

    def __post_init__(self):
        if not isinstance(self.design, DesignPoints):
            object.__setattr__(self, "design", DesignPoints(self.design))

    @property
    def dim(self):
        return self.design.n


@dataclass(frozen=True)
class BlockProduct:
    """Cartesian product of cones acting on consecutive coordinate runs."""

    parts: tuple

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise InvalidArgument("a block product needs at least one factor")
        object.__setattr__(self, "parts", parts)

    @property
    def dim(self):
        return sum(p.dim for p in self.parts)


def is_convex_cone(cone):
    """True for every variant except the (non-convex) unimodal union."""
    if isinstance(cone, Unimodal):
        return False
    if isinstance(cone, BlockProduct):
        return all(is_convex_cone(p) for p in cone.parts)
    return True


@dataclass
class KktReport:
    """Optimality residuals of a claimed cone projection.

    Attributes
    ----------
    stationarity_residual : float
        Largest positive inner product of the residual ``y - fit`` with a
        unit generator (or lineality direction) of the cone. Zero iff the
        residual lies in the polar cone.
    feasibility_residual : float
        Largest violation of a defining inequality, in units of ``y``.
    complementarity_residual : float
        ``|fit^T (y - fit)|``.
    polar_inner_product : float
        ``fit^T y - ||fit||^2`` (signed).
    """

    stationarity_residual: float
    feasibility_residual: float
    complementarity_residual: float
    polar_inner_product: float

    def max_residual(self):
        return max(
            self.stationarity_residual,
            self.feasibility_residual,
            self.complementarity_residual,
        )

    def certified(self, tol=1e-9, scale=1.0):
        """All residuals below ``tol * scale``."""
        return self.max_residual() <= tol * scale


@dataclass
class ProjectionResult:
    """A fitted sequence with its optimality certificate.

    ``blocks`` holds half-open ``(start, stop)`` index pairs partitioning
    ``range(n)`` into the constant (monotone cones) or affine (convex
    cone) pieces of ``fit``.
    """

    fit: np.ndarray
    objective: float
    blocks: list = field(default_factory=list)
    kkt: KktReport | None = None
    iterations: int = 0
