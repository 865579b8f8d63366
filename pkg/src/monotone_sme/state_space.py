"""Box state spaces, the componentwise order and the box projection."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, GridTooLarge

MAX_GRID_POINTS = 2_000_000


def _as_finite_vector(x, name):
    arr = np.array(x, dtype=float, ndmin=1)
    if arr.ndim != 1:
        raise DomainError(f"{name} must be a vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite entries: {arr.tolist()}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Box:
    """Hypercube ``{s : lower[i] <= s[i] <= upper[i]}`` in R^k."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _as_finite_vector(self.lower, "lower")
        hi = _as_finite_vector(self.upper, "upper")
        if lo.shape != hi.shape:
            raise DimensionError(lo.size, hi.size, "upper bound")
        if lo.size < 1:
            raise DomainError("box dimension must be at least 1")
        if not np.all(lo < hi):
            raise DomainError(f"box needs lower < upper, got {lo.tolist()} / {hi.tolist()}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def __eq__(self, other):
        return (isinstance(other, Box) and np.array_equal(self.lower, other.lower)
                and np.array_equal(self.upper, other.upper))

    def __hash__(self):
        return hash((tuple(self.lower), tuple(self.upper)))

    def __repr__(self):
        return f"Box({self.lower.tolist()}, {self.upper.tolist()})"

    def contains(self, x) -> bool:
        x = point(x, self.dim)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def check(self, x, what="point"):
        """Return ``x`` as a validated point of the box or raise."""
        x = point(x, self.dim, what)
        if not (np.all(x >= self.lower) and np.all(x <= self.upper)):
            raise DomainError(f"{what} {x.tolist()} lies outside {self!r}")
        return x

    def corners(self):
        return self.lower.copy(), self.upper.copy()

    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)


def point(x, dim=None, what="point") -> np.ndarray:
    """Validate ``x`` as a finite real vector, optionally of dimension ``dim``."""
    arr = np.array(x, dtype=float, ndmin=1)
    if arr.ndim != 1:
        raise DomainError(f"{what} must be a vector, got shape {arr.shape}")
    if dim is not None and arr.size != dim:
        raise DimensionError(dim, arr.size, what)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{what} has non-finite entries: {arr.tolist()}")
    return arr


def project(box: Box, x):
    """Clamp ``x`` componentwise into ``box``.

    For a box the clamp is the minimum-Euclidean-distance projection, and it
    preserves the componentwise order. ``x`` may carry leading batch axes;
    the last axis must have the box's dimension.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != box.dim:
        raise DimensionError(box.dim, x.shape[-1] if x.ndim else 0)
    return np.minimum(np.maximum(x, box.lower), box.upper)


def leq(x, y) -> bool:
    """Componentwise order: True iff ``x[i] <= y[i]`` for every i."""
    x = point(x, what="x")
    y = point(y, what="y")
    if x.size != y.size:
        raise DimensionError(x.size, y.size, "y")
    return bool(np.all(x <= y))


def lattice_grid(box: Box, points_per_dim: int, cap: int = MAX_GRID_POINTS) -> np.ndarray:
    """Equispaced lattice of ``points_per_dim**k`` points including all corners.

    Rows are in lexicographic order of the coordinate index (first
    coordinate varies slowest).
    """
    if int(points_per_dim) != points_per_dim or points_per_dim < 2:
        raise DomainError(f"points_per_dim must be an integer >= 2, got {points_per_dim}")
    points_per_dim = int(points_per_dim)
    total = points_per_dim ** box.dim
    if total > cap:
        raise GridTooLarge(f"lattice of {points_per_dim}^{box.dim} = {total} points exceeds cap {cap}")
    axes = axis_nodes(box, points_per_dim)
    return np.array(list(itertools.product(*axes)), dtype=float).reshape(total, box.dim)


def axis_nodes(box: Box, points_per_dim: int):
    """Per-coordinate node vectors; the end nodes equal the bounds exactly."""
    axes = []
    for lo, hi in zip(box.lower, box.upper):
        nodes = np.linspace(lo, hi, points_per_dim)
        nodes[0], nodes[-1] = lo, hi
        axes.append(nodes)
    return axes


def latin_hypercube(box: Box, n: int, rng: np.random.Generator) -> np.ndarray:
    """Latin-hypercube sample of ``n`` points in ``box``."""
    k = box.dim
    u = (rng.permuted(np.tile(np.arange(n), (k, 1)), axis=1).T + rng.random((n, k))) / n
    return box.lower + u * box.width


def sample_points(box: Box, lattice_max_dim=2, per_dim=33, lhs_points=1024, seed=0):
    """Default point set for maxima over S: lattice for small k, LHS otherwise."""
    if box.dim <= lattice_max_dim:
        return lattice_grid(box, per_dim)
    return latin_hypercube(box, lhs_points, np.random.default_rng(seed))
