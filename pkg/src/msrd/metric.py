"""Finite metric spaces, balls, clusters and solution costs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels

PointId = int


class MetricError(ValueError):
    """Raised when an explicit distance matrix is not a metric."""

    def __init__(self, message: str, triple: tuple[int, int, int] | None = None):
        super().__init__(message)
        self.triple = triple


def round_up_pow2(x: float) -> float:
    """Round ``x`` up to the smallest power of two that is >= x; 0 maps to 0.

    Exact powers of two are returned unchanged.
    """
    if x < 0 or math.isnan(x):
        raise ValueError(f"round_up_pow2 expects a nonnegative real, got {x}")
    if x == 0:
        return 0.0
    mantissa, exponent = math.frexp(x)  # x = mantissa * 2**exponent, 0.5 <= m < 1
    if mantissa == 0.5:
        return float(x)
    return math.ldexp(1.0, exponent)


class MetricSpace:
    """Immutable finite metric space.

    Backed either by an explicit validated distance matrix or by Euclidean
    coordinates (distances computed on demand, full matrix cached lazily).
    """

    def __init__(self, matrix: np.ndarray | None, coords: np.ndarray | None):
        if matrix is None and coords is None:
            raise ValueError("need a distance matrix or coordinates")
        self._matrix = matrix
        self.coords = coords
        self.n = len(matrix) if matrix is not None else len(coords)
        self._diameter: float | None = None
        self._aspect: float | None = None

    # -- construction -------------------------------------------------

    @classmethod
    def from_points(cls, coords) -> "MetricSpace":
        pts = np.ascontiguousarray(np.asarray(coords, dtype=np.float64))
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError("coordinates must form a nonempty 2-d array")
        if len(np.unique(pts, axis=0)) != len(pts):
            raise MetricError("duplicate points: distinct points must have positive distance")
        return cls(None, pts)

    @classmethod
    def from_matrix(cls, matrix, validate: bool = True) -> "MetricSpace":
        dist = np.ascontiguousarray(np.asarray(matrix, dtype=np.float64))
        if dist.ndim != 2 or dist.shape[0] != dist.shape[1] or dist.shape[0] < 1:
            raise MetricError("distance matrix must be square and nonempty")
        if validate:
            _validate_matrix(dist)
        return cls(dist, None)

    # -- basic accessors ----------------------------------------------

    def matrix(self) -> np.ndarray:
        """Full distance matrix (built once and cached for coordinate spaces)."""
        if self._matrix is None:
            self._matrix = kernels.euclidean_matrix(self.coords)
        return self._matrix

    def distance(self, a: PointId, b: PointId) -> float:
        if not (0 <= a < self.n and 0 <= b < self.n):
            raise IndexError(f"point index out of range: ({a}, {b}) with n={self.n}")
        if self._matrix is not None:
            return float(self._matrix[a, b])
        diff = self.coords[a] - self.coords[b]
        return float(np.sqrt((diff * diff).sum()))

    @property
    def diameter(self) -> float:
        if self._diameter is None:
            self._diameter = float(self.matrix().max())
        return self._diameter

    @property
    def aspect_ratio(self) -> float:
        if self._aspect is None:
            positive = self.matrix()[self.matrix() > 0]
            self._aspect = float(self.diameter / positive.min()) if positive.size else 1.0
        return self._aspect

    def points(self) -> range:
        return range(self.n)

    # -- geometry ------------------------------------------------------

    def diameter_of(self, subset) -> float:
        idx = _as_index(subset)
        if len(idx) == 0:
            raise ValueError("diameter of an empty subset is undefined")
        return float(kernels.subset_diameter(self.matrix(), idx))

    def ball_members(
        self, center: PointId, radius: float, restrict=None
    ) -> frozenset[PointId]:
        if radius < 0:
            raise ValueError("ball radius must be nonnegative")
        row = self.matrix()[center]
        if restrict is None:
            return frozenset(np.flatnonzero(row <= radius).tolist())
        idx = _as_index(restrict)
        return frozenset(int(p) for p in idx if row[p] <= radius)

    def restrict(self, subset) -> tuple["MetricSpace", list[PointId]]:
        """Subspace over ``subset``; returns it with the local->global id map."""
        idx = _as_index(subset)
        sub = np.ascontiguousarray(self.matrix()[np.ix_(idx, idx)])
        return MetricSpace(sub, None), [int(p) for p in idx]


def _as_index(subset) -> np.ndarray:
    if isinstance(subset, np.ndarray):
        return subset.astype(np.int64, copy=False)
    return np.asarray(sorted(subset), dtype=np.int64)


def _validate_matrix(dist: np.ndarray) -> None:
    n = len(dist)
    if (dist < 0).any():
        raise MetricError("negative distance entry")
    if (np.diag(dist) != 0).any():
        raise MetricError("nonzero diagonal entry")
    if not (dist == dist.T).all():
        raise MetricError("distance matrix is not symmetric")
    off = dist + np.eye(n)
    if (off <= 0).any():
        raise MetricError("distinct points must have positive distance")
    i, j, k = kernels.first_triangle_violation(dist)
    if i >= 0:
        raise MetricError(
            f"triangle inequality violated: d({i},{j}) > d({i},{k}) + d({k},{j})",
            triple=(int(i), int(j), int(k)),
        )


# ---------------------------------------------------------------------------
# solutions


@dataclass(frozen=True)
class Ball:
    center: PointId
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("ball radius must be nonnegative")


@dataclass(frozen=True)
class BallSolution:
    balls: tuple[Ball, ...]
    outliers: frozenset[PointId] = frozenset()

    def covered(self, space: MetricSpace) -> frozenset[PointId]:
        got: set[PointId] = set()
        for b in self.balls:
            got |= space.ball_members(b.center, b.radius)
        return frozenset(got)

    def covers(self, space: MetricSpace) -> bool:
        return self.covered(space) | self.outliers >= set(range(space.n))


@dataclass(frozen=True)
class Cluster:
    members: frozenset[PointId]
    tag: float | None = None

    def __post_init__(self):
        if not self.members:
            raise ValueError("cluster must be nonempty")


@dataclass(frozen=True)
class PartitionSolution:
    clusters: tuple[Cluster, ...]
    outliers: frozenset[PointId] = frozenset()

    def is_partition_of(self, space: MetricSpace) -> bool:
        seen: set[PointId] = set(self.outliers)
        for c in self.clusters:
            if c.members & seen:
                return False
            seen |= c.members
        return seen == set(range(space.n))


def solution_cost(
    sol: BallSolution | PartitionSolution,
    alpha: float = 1.0,
    space: MetricSpace | None = None,
) -> float:
    """Sum of ball radii (or cluster diameters) raised to the ``alpha`` power."""
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    if isinstance(sol, BallSolution):
        return float(sum(b.radius ** alpha for b in sol.balls))
    if space is None:
        raise ValueError("partition cost needs the metric space for diameters")
    return float(sum(space.diameter_of(c.members) ** alpha for c in sol.clusters))


def diameter(space: MetricSpace, subset) -> float:
    """Largest pairwise distance within ``subset`` (0 for singletons)."""
    return space.diameter_of(subset)


def distance(space: MetricSpace, a: PointId, b: PointId) -> float:
    return space.distance(a, b)


def ball_members(
    space: MetricSpace, center: PointId, radius: float, restrict=None
) -> frozenset[PointId]:
    """Points of ``restrict`` (default: all) within ``radius`` of ``center``."""
    return space.ball_members(center, radius, restrict)
