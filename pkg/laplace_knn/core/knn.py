# ---
# jupyter:
#   jupytext:
#     formats: ipynb,py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
#       format_version: '1.3'
#       jupytext_version: 1.19.1
#   kernelspec:
#     display_name: Python (miniforge)
#     language: python
#     name: miniforge-base
# ---

# %%
# core/knn.py

# %%
# Dev setup
# %load_ext autoreload
# %autoreload 2

# %%
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist
from scipy.special import gammaln

from laplace_knn.core.config import DEFAULT_SETTINGS, EstimatorSettings
from laplace_knn.core.errors import (
    DimensionMismatchError,
    DomainError,
    InsufficientPointsError,
    InvalidDimensionError,
)

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, Sequence[float], Sequence[Sequence[float]]]


# %%
@dataclass(frozen=True, eq=False)
class PointSet:
    """
    An m x d sample. A flat sequence is read as m points in d = 1.

    Example:
        >>> ps = PointSet([0.0, 1.0, 3.0])
        >>> (ps.m, ps.d)
        (3, 1)
    """
    points: np.ndarray  # (m, d) float64, read-only

    def __post_init__(self) -> None:
        arr = np.array(self.points, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        arr.setflags(write=False)
        object.__setattr__(self, "points", arr)
        self.validate()

    @property
    def m(self) -> int:
        return int(self.points.shape[0])

    @property
    def d(self) -> int:
        return int(self.points.shape[1])

    def __len__(self) -> int:
        return self.m

    def validate(self) -> None:
        if self.points.ndim != 2:
            raise InvalidDimensionError(
                f"points must form an m x d array, got shape {self.points.shape}"
            )
        if self.points.shape[1] < 1:
            raise InvalidDimensionError("dimension d must be >= 1")
        if self.points.shape[0] < 1:
            raise InsufficientPointsError("a PointSet needs at least one point")
        if not np.all(np.isfinite(self.points)):
            raise DomainError("all coordinates must be finite")

    def scaled(self, c: float) -> "PointSet":
        return PointSet(self.points * c)

    def take(self, order: Sequence[int]) -> "PointSet":
        return PointSet(self.points[np.asarray(order)])


# %%
def log_unit_ball_volume(d: int) -> float:
    if int(d) != d or d < 1:
        raise InvalidDimensionError(f"dimension must be a positive integer, got {d!r}")
    return float(d * math.log(2.0) + d * gammaln(1.5) - gammaln(1.0 + d / 2.0))


def unit_ball_volume(d: int) -> float:
    """
    Volume V_d of the Euclidean unit ball.

    Example:
        >>> round(unit_ball_volume(2), 8)
        3.14159265
        >>> round(unit_ball_volume(3), 8)
        4.1887902
    """
    return math.exp(log_unit_ball_volume(d))


# %%
def as_point_array(x: ArrayLike, d: int) -> np.ndarray:
    q = np.asarray(x, dtype=float)
    if q.ndim == 0:
        q = q.reshape(1, 1)
    elif q.ndim == 1:
        q = q.reshape(1, -1) if d > 1 or q.shape[0] == 1 else q.reshape(-1, 1)
    if q.shape[1] != d:
        raise DimensionMismatchError(
            f"query dimension {q.shape[1]} does not match indexed dimension {d}"
        )
    return q


def _pick_kth(
    dist: np.ndarray,
    idx: np.ndarray,
    k: int,
    exclude: Optional[np.ndarray],
) -> np.ndarray:
    # dist/idx hold the k (or k + 1 with exclusion) nearest, sorted ascending
    if exclude is None:
        return dist[:, k - 1]
    hit = idx[:, :k] == exclude[:, None]
    # excluded point among the first k: the k-th survivor sits one slot later
    return np.where(hit.any(axis=1), dist[:, k], dist[:, k - 1])


class KnnIndex:
    """
    Exact Euclidean k-NN queries over a PointSet.

    A cKDTree is built when the set has more than ``leaf_size`` points;
    smaller sets are answered by brute force. Both paths return the same
    distances, ties in distance resolved by ascending point index.
    """

    def __init__(
        self,
        points: PointSet,
        *,
        settings: EstimatorSettings = DEFAULT_SETTINGS,
    ):
        self.points = points
        self.leaf_size = settings.leaf_size
        self._tree: Optional[cKDTree] = None
        if points.m > self.leaf_size:
            self._tree = cKDTree(points.points, leafsize=self.leaf_size)
        logger.debug(
            "KnnIndex over m=%d d=%d (%s)",
            points.m, points.d, "tree" if self._tree is not None else "brute force",
        )

    @property
    def uses_tree(self) -> bool:
        return self._tree is not None

    def query(
        self,
        x: ArrayLike,
        k: int,
        *,
        exclude: Optional[Sequence[int]] = None,
        method: str = "auto",
    ) -> np.ndarray:
        """
        k-th nearest neighbor distance for each query row.

        ``exclude`` gives, per query, the index of one indexed point to leave
        out of the candidate set (the query point itself for self volumes).
        ``method`` is "auto", "tree" or "brute".
        """
        q = as_point_array(x, self.points.d)
        k = int(k)
        if k < 1:
            raise InsufficientPointsError(f"k must be >= 1, got {k}")
        ex = None if exclude is None else np.asarray(exclude, dtype=np.int64).reshape(-1)
        if ex is not None and ex.shape[0] != q.shape[0]:
            raise DimensionMismatchError(
                f"exclude has {ex.shape[0]} entries for {q.shape[0]} queries"
            )
        candidates = self.points.m - (1 if ex is not None else 0)
        if candidates < k:
            raise InsufficientPointsError(
                f"need at least k={k} candidate points, have {candidates}"
            )

        width = k + 1 if ex is not None else k
        if method == "auto":
            method = "tree" if self._tree is not None else "brute"
        if method == "tree":
            tree = self._tree if self._tree is not None else cKDTree(
                self.points.points, leafsize=self.leaf_size
            )
            dist, idx = tree.query(q, k=width)
            dist = np.asarray(dist, dtype=float).reshape(q.shape[0], -1)
            idx = np.asarray(idx).reshape(q.shape[0], -1)
        elif method == "brute":
            dist, idx = _brute_force_neighbors(self.points.points, q, width)
        else:
            raise ValueError(f"unknown query method {method!r}")
        dist, idx = _canonical_distances(self.points.points, q, idx)
        return _pick_kth(dist, idx, k, ex)


def _canonical_distances(points: np.ndarray, q: np.ndarray, idx: np.ndarray):
    # one distance formula for both search paths, so equal neighbor sets give equal bits
    diff = q[:, None, :] - points[idx]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    order = np.lexsort((idx, dist))
    return np.take_along_axis(dist, order, axis=1), np.take_along_axis(idx, order, axis=1)


def _brute_force_neighbors(points: np.ndarray, q: np.ndarray, width: int):
    width = min(width, points.shape[0])
    all_d = cdist(q, points, metric="euclidean")
    order = np.argsort(all_d, axis=1, kind="stable")[:, :width]
    return np.take_along_axis(all_d, order, axis=1), order


def brute_force_knn_distance(
    points: PointSet,
    x: ArrayLike,
    k: int,
    *,
    exclude: Optional[Sequence[int]] = None,
) -> np.ndarray:
    # Reference path used by the index-equivalence checks
    return KnnIndex(points).query(x, k, exclude=exclude, method="brute")


# %%
def knn_distance(
    index: KnnIndex,
    x: ArrayLike,
    k: int,
    exclude: Optional[int] = None,
) -> float:
    """
    r_k(x | A): the k-th smallest distance from one point x to the indexed
    set, optionally with the point at index ``exclude`` removed.

    Example:
        >>> idx = KnnIndex(PointSet([0.0, 1.0, 3.0]))
        >>> knn_distance(idx, [0.0], 1, exclude=0)
        1.0
        >>> knn_distance(idx, [0.0], 2, exclude=0)
        3.0
    """
    ex = None if exclude is None else [int(exclude)]
    q = np.asarray(x, dtype=float).reshape(1, -1)
    return float(index.query(q, k, exclude=ex)[0])


@dataclass(frozen=True, eq=False)
class KnnStatistic:
    """
    Normalized k-NN ball volumes u = multiplier * V_d * r_k^d, one per query
    point; the multiplier is the size of the neighbor set searched.

    Example:
        >>> stat = KnnStatistic.from_radii([0.5, 0.0], k=1, multiplier=4, d=1)
        >>> np.round(stat.u, 12).tolist()
        [4.0, 0.0]
        >>> stat.duplicates
        1
    """
    radii: np.ndarray
    u: np.ndarray
    k: int
    multiplier: int

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if int(self.k) != self.k or self.k < 1:
            raise InsufficientPointsError(f"k must be >= 1, got {self.k!r}")
        if int(self.multiplier) != self.multiplier or self.multiplier < 1:
            raise InsufficientPointsError(
                f"multiplier must be a positive integer, got {self.multiplier!r}"
            )
        if self.u.shape != self.radii.shape:
            raise DimensionMismatchError(
                f"{self.u.shape[0]} volumes for {self.radii.shape[0]} radii"
            )
        if np.any(self.u < 0) or np.any(self.radii < 0):
            raise DomainError("k-NN radii and volumes must be nonnegative")

    @classmethod
    def from_radii(cls, radii: ArrayLike, *, k: int, multiplier: int, d: int) -> "KnnStatistic":
        r = np.asarray(radii, dtype=float).reshape(-1)
        u = multiplier * unit_ball_volume(d) * np.power(r, d)
        r.setflags(write=False)
        u.setflags(write=False)
        return cls(radii=r, u=u, k=int(k), multiplier=int(multiplier))

    @property
    def duplicates(self) -> int:
        """Query points whose k-th neighbor sits at distance 0."""
        return int(np.count_nonzero(self.radii == 0))

    def __len__(self) -> int:
        return int(self.u.shape[0])


def self_knn_statistic(
    sample: PointSet,
    k: int,
    *,
    index: Optional[KnnIndex] = None,
    settings: EstimatorSettings = DEFAULT_SETTINGS,
) -> KnnStatistic:
    if sample.m <= k:
        raise InsufficientPointsError(
            f"self volumes need m > k, got m={sample.m}, k={k}"
        )
    index = index if index is not None else KnnIndex(sample, settings=settings)
    r = index.query(sample.points, k, exclude=np.arange(sample.m))
    return KnnStatistic.from_radii(r, k=k, multiplier=sample.m - 1, d=sample.d)


def self_knn_volumes(
    sample: PointSet,
    k: int,
    *,
    index: Optional[KnnIndex] = None,
    settings: EstimatorSettings = DEFAULT_SETTINGS,
) -> np.ndarray:
    """
    U_m^(k)(X_i) = (m - 1) V_d r_k(X_i | X without X_i)^d for every sample point.

    Example:
        >>> np.round(self_knn_volumes(PointSet([0.0, 1.0, 3.0]), 1), 12).tolist()
        [4.0, 4.0, 8.0]
        >>> round(float(self_knn_volumes(PointSet([0.0, 1.0, 3.0]), 2)[0]), 12)
        12.0
    """
    return self_knn_statistic(sample, k, index=index, settings=settings).u


def cross_knn_statistic(
    sample_x: PointSet,
    sample_y: PointSet,
    l: int,
    *,
    index: Optional[KnnIndex] = None,
    settings: EstimatorSettings = DEFAULT_SETTINGS,
) -> KnnStatistic:
    if sample_x.d != sample_y.d:
        raise DimensionMismatchError(
            f"samples have dimensions {sample_x.d} and {sample_y.d}"
        )
    if sample_y.m < l:
        raise InsufficientPointsError(
            f"cross volumes need n >= l, got n={sample_y.m}, l={l}"
        )
    index = index if index is not None else KnnIndex(sample_y, settings=settings)
    r = index.query(sample_x.points, l)
    return KnnStatistic.from_radii(r, k=l, multiplier=sample_y.m, d=sample_x.d)


def cross_knn_volumes(
    sample_x: PointSet,
    sample_y: PointSet,
    l: int,
    *,
    index: Optional[KnnIndex] = None,
    settings: EstimatorSettings = DEFAULT_SETTINGS,
) -> np.ndarray:
    """
    V_n^(l)(X_i) = n V_d r_l(X_i | Y)^d; no point of Y is excluded.

    Example:
        >>> np.round(cross_knn_volumes(PointSet([0.0]), PointSet([1.0, 2.0]), 2), 12).tolist()
        [8.0]
    """
    return cross_knn_statistic(sample_x, sample_y, l, index=index, settings=settings).u

# %%
