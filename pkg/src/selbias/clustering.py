"""Cluster-based estimation of sampling probabilities.

A CART regression tree is grown on the labeled biased sample ``S`` and its
leaves are used as clusters. The pool ``U`` is routed through the tree
afterwards, and each training point gets the raw weight
``|C_i cap U| / |C_i cap S|`` of its leaf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels

DEFAULT_MIN_LEAF = 4
#: A split must reduce the sum of squared errors by more than this times sum(y^2).
GAIN_RTOL = 1e-12


@dataclass(frozen=True)
class Split:
    node: int
    feature: int
    threshold: float
    gain: float


@dataclass(frozen=True)
class ClusterPartition:
    """Fitted tree in flat-array form plus per-leaf S/U counts.

    Internal nodes have ``feature >= 0``; leaves have ``feature == -1`` and a
    leaf id in ``leaf``. Leaf ids follow depth-first, left-first order.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf: np.ndarray
    splits: tuple[Split, ...]
    s_count: np.ndarray
    u_count: np.ndarray | None = None
    min_leaf: int = DEFAULT_MIN_LEAF
    n_features: int = field(default=0)

    @property
    def k(self) -> int:
        return self.s_count.size

    @property
    def m(self) -> int:
        return int(self.s_count.sum())

    @property
    def n(self) -> int:
        self._need_counts()
        return int(self.u_count.sum())

    @property
    def c_max(self) -> int:
        """Largest leaf population in ``U``."""
        self._need_counts()
        return int(self.u_count.max())

    @property
    def q_hat(self) -> np.ndarray:
        """Empirical per-leaf sampling frequency ``|C_i cap S| / |C_i cap U|``."""
        self._need_counts()
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.u_count > 0, self.s_count / np.maximum(self.u_count, 1), np.nan)

    @property
    def q0(self) -> float:
        return float(np.nanmin(self.q_hat))

    def _need_counts(self):
        if self.u_count is None:
            raise ValueError("pool counts not assigned; call assign_counts first")

    def route(self, X) -> np.ndarray:
        X = np.ascontiguousarray(_as_2d(X))
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        if not np.all(np.isfinite(X)):
            raise ValueError("cannot route points with non-finite features")
        return _kernels.route(X, self.feature, self.threshold, self.left, self.right, self.leaf)


def _as_2d(X):
    X = np.asarray(X, dtype=float)
    return X[:, None] if X.ndim == 1 else X


def fit_tree(X, y, min_leaf: int = DEFAULT_MIN_LEAF) -> ClusterPartition:
    """Grow a greedy variance-impurity tree with no depth limit.

    Candidate thresholds are midpoints between consecutive distinct values;
    a split is rejected if either child would get fewer than ``min_leaf``
    points. Ties go to the lowest feature index, then the lowest threshold.
    """
    X = np.ascontiguousarray(_as_2d(X))
    y = np.ascontiguousarray(np.asarray(y, dtype=float).ravel())
    if y.size == 0:
        raise ValueError("cannot fit a tree on an empty sample")
    if X.shape[0] != y.size:
        raise ValueError("X and y lengths differ")
    if min_leaf < 1:
        raise ValueError("min_leaf must be positive")
    if y.size < min_leaf:
        raise ValueError(f"sample of size {y.size} is smaller than min_leaf={min_leaf}")

    feature, threshold, left, right, leaf, s_count = [], [], [], [], [], []
    splits = []

    def new_node():
        for arr, val in ((feature, -1), (threshold, 0.0), (left, -1), (right, -1), (leaf, -1)):
            arr.append(val)
        return len(feature) - 1

    def grow(idx):
        node = new_node()
        Xn, yn = X[idx], y[idx]
        f, thr, gain = _kernels.best_split(Xn, yn, min_leaf)
        if f >= 0 and gain > GAIN_RTOL * float(yn @ yn):
            splits.append(Split(node, int(f), float(thr), float(gain)))
            feature[node], threshold[node] = int(f), float(thr)
            go_left = Xn[:, f] <= thr
            left[node] = grow(idx[go_left])
            right[node] = grow(idx[~go_left])
        else:
            leaf[node] = len(s_count)
            s_count.append(idx.size)
        return node

    grow(np.arange(y.size))
    return ClusterPartition(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        leaf=np.asarray(leaf, dtype=np.int64),
        splits=tuple(splits),
        s_count=np.asarray(s_count, dtype=np.int64),
        min_leaf=min_leaf,
        n_features=X.shape[1],
    )


def assign_counts(partition: ClusterPartition, pool) -> ClusterPartition:
    leaves = partition.route(pool)
    u = np.bincount(leaves, minlength=partition.k).astype(np.int64)
    return replace(partition, u_count=u)


def weights(partition: ClusterPartition, X) -> np.ndarray:
    """Raw weight ``u_count / s_count`` of each point's leaf."""
    partition._need_counts()
    leaves = partition.route(X)
    s = partition.s_count[leaves]
    if np.any(s == 0):
        raise ValueError("training point routed to a leaf with no sample points")
    return partition.u_count[leaves] / s


def frequency_bound(m_distinct: int, n: int, p0: float, delta: float) -> float:
    """Uniform deviation between sampling probabilities and frequencies.

    ``sqrt((log(2 m') + log(1/delta)) / (p0 n))``, holding with probability
    at least ``1 - delta`` over all ``m'`` distinct sampled points.
    """
    if not p0 > 0:
        raise ValueError("p0 must be positive (support violation)")
    if not (0 < delta < 1) or m_distinct < 1 or n < 1:
        raise ValueError("need m' >= 1, n >= 1 and delta in (0, 1)")
    return math.sqrt((math.log(2 * m_distinct) + math.log(1 / delta)) / (p0 * n))


def cluster_distance_bounds(
    B: float, c_max: int, k: int, q0: float, n: int, m: int, delta: float
) -> tuple[float, float]:
    """l1 and l2 bounds between ideal and cluster-estimated weight distributions."""
    if min(B, c_max, k, q0, n, m, delta) <= 0:
        raise ValueError("all arguments must be positive")
    log_term = math.log(2 * k) + math.log(1 / delta)
    l1 = B**2 * math.sqrt(c_max * k * log_term / (q0 * n * m))
    l2 = B**2 * math.sqrt(c_max * k * log_term / (q0 * n * m**2))
    return l1, l2
