"""Two classical outlier detectors used as comparison points: an
isolation forest and DBSCAN over embedding vectors.

Isolation forest: each tree grows on a psi-row subsample by recursive
random splits (uniform feature among non-constant features, uniform cut
between that feature's min and max) until a point is isolated or the
height limit ceil(log2 psi) is reached. The score is
2 ** (-E[h(x)] / c(psi)) with c(n) the exact average unsuccessful-search
path length; higher means more anomalous and values stay in (0, 1].

DBSCAN: a point is core iff at least min_pts points (itself included)
lie within eps. Clusters are grown from core points in input order, so
labels are deterministic; non-reachable points get the noise label -1.
The score of a point is its distance to the min_pts-th nearest neighbor,
itself included.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .embedder import EmbeddingVector
from .errors import ValidationError


def expected_path_length(n: int) -> float:
    """Average unsuccessful-search path length c(n) of a BST on n points.

    c(n) = 2 * H(n - 1) - 2 * (n - 1) / n with the exact harmonic number;
    c(2) = 1 and c(n) = 0 for n < 2.
    """
    if n < 2:
        return 0.0
    harmonic = sum(1.0 / i for i in range(1, n))
    return 2.0 * harmonic - 2.0 * (n - 1) / n


@dataclass(frozen=True)
class IsolationTree:
    """One tree in flat-array form, evaluated by the kernel backend.

    Internal nodes carry a feature index and cut; leaves have
    feature = -1 and an adjustment of c(subsample size at the leaf).
    """

    feature: np.ndarray  # int64, -1 marks a leaf
    threshold: np.ndarray  # float64 cut values
    left: np.ndarray  # int64 child indices
    right: np.ndarray
    adjust: np.ndarray  # float64 leaf adjustments


def _grow_tree(
    X: np.ndarray, height_limit: int, rng: np.random.Generator
) -> IsolationTree:
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    adjust: list[float] = []

    def alloc() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        adjust.append(0.0)
        return len(feature) - 1

    def grow(rows: np.ndarray, depth: int) -> int:
        node = alloc()
        sub = X[rows]
        lo = sub.min(axis=0)
        hi = sub.max(axis=0)
        candidates = np.flatnonzero(hi > lo)
        if rows.size <= 1 or depth >= height_limit or candidates.size == 0:
            adjust[node] = expected_path_length(rows.size)
            return node
        f = int(candidates[rng.integers(candidates.size)])
        cut = rng.uniform(lo[f], hi[f])
        mask = sub[:, f] < cut
        if not mask.any():
            # uniform() can land exactly on the minimum; nudge the cut up
            # so the minimum goes left and both sides stay non-empty
            cut = float(np.nextafter(lo[f], hi[f]))
            mask = sub[:, f] < cut
        feature[node] = f
        threshold[node] = float(cut)
        left[node] = grow(rows[mask], depth + 1)
        right[node] = grow(rows[~mask], depth + 1)
        return node

    grow(np.arange(X.shape[0]), 0)
    return IsolationTree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        adjust=np.asarray(adjust, dtype=np.float64),
    )


@dataclass(frozen=True)
class IsolationForestModel:
    trees: tuple[IsolationTree, ...]
    subsample: int
    seed: int


def _as_matrix(vectors: Sequence[EmbeddingVector] | np.ndarray) -> np.ndarray:
    if isinstance(vectors, np.ndarray):
        X = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    else:
        if len(vectors) == 0:
            raise ValidationError("input vector set is empty")
        X = np.stack([v.values for v in vectors]).astype(np.float64)
    if X.size == 0:
        raise ValidationError("input vector set is empty")
    return X


def iforest_fit(
    vectors: Sequence[EmbeddingVector] | np.ndarray,
    *,
    psi: int = 256,
    n_trees: int = 100,
    seed: int = 0,
) -> IsolationForestModel:
    """Fit an isolation forest; psi is clamped to the number of rows."""
    X = _as_matrix(vectors)
    if psi < 2:
        raise ValidationError(f"subsample size must be >= 2, got {psi}")
    if n_trees < 1:
        raise ValidationError(f"tree count must be >= 1, got {n_trees}")
    n = X.shape[0]
    psi_eff = min(psi, n)
    height_limit = max(1, math.ceil(math.log2(psi_eff)))
    base = np.random.SeedSequence(seed)
    trees = []
    for child in base.spawn(n_trees):
        rng = np.random.default_rng(child)
        rows = rng.choice(n, size=psi_eff, replace=False)
        trees.append(_grow_tree(X[rows], height_limit, rng))
    return IsolationForestModel(
        trees=tuple(trees), subsample=psi_eff, seed=seed
    )


def iforest_score_all(
    model: IsolationForestModel, vectors: Sequence[EmbeddingVector] | np.ndarray
) -> np.ndarray:
    """Anomaly score per row: 2 ** (-mean path length / c(psi))."""
    X = _as_matrix(vectors)
    depths = np.zeros(X.shape[0], dtype=np.float64)
    for tree in model.trees:
        depths += _kernels.iforest_depths(
            tree.feature, tree.threshold, tree.left, tree.right, tree.adjust, X
        )
    mean_depth = depths / len(model.trees)
    c = expected_path_length(model.subsample)
    if c <= 0.0:
        # psi < 2 cannot happen after fit validation; guard anyway
        return np.full(X.shape[0], 0.5)
    return np.power(2.0, -mean_depth / c)


def iforest_score(
    model: IsolationForestModel, x: EmbeddingVector | np.ndarray
) -> float:
    arr = x.values if isinstance(x, EmbeddingVector) else np.asarray(x)
    return float(iforest_score_all(model, arr[None, :])[0])


NOISE = -1


@dataclass(frozen=True)
class DbscanConfig:
    """Radius and density floor; min_pts counts the point itself."""

    eps: float
    min_pts: int = 4

    def __post_init__(self) -> None:
        if not (np.isfinite(self.eps) and self.eps > 0.0):
            raise ValidationError(f"eps must be positive, got {self.eps}")
        if self.min_pts < 1:
            raise ValidationError(f"min_pts must be >= 1, got {self.min_pts}")


def default_eps(
    vectors: Sequence[EmbeddingVector] | np.ndarray, k: int = 4
) -> float:
    """Median distance to the k-th nearest neighbor (self excluded)."""
    X = _as_matrix(vectors)
    n = X.shape[0]
    if n < 2:
        raise ValidationError("need at least 2 vectors to pick eps")
    D2 = _kernels.pairwise_sq_dists(X)
    D = np.sqrt(np.sort(D2, axis=1))
    col = min(k, n - 1)  # column 0 is the point itself
    return float(np.median(D[:, col]))


def dbscan_cluster(
    vectors: Sequence[EmbeddingVector] | np.ndarray, cfg: DbscanConfig
) -> np.ndarray:
    """Cluster labels 0..C-1 in discovery order, NOISE (-1) otherwise."""
    X = _as_matrix(vectors)
    n = X.shape[0]
    D2 = _kernels.pairwise_sq_dists(X)
    within = D2 <= cfg.eps * cfg.eps
    neighbor_counts = within.sum(axis=1)  # includes the point itself
    core = neighbor_counts >= cfg.min_pts
    neighbors = [np.flatnonzero(within[i]) for i in range(n)]

    UNVISITED = -2
    labels = np.full(n, UNVISITED, dtype=np.int64)
    cluster = 0
    for i in range(n):
        if labels[i] != UNVISITED:
            continue
        if not core[i]:
            labels[i] = NOISE
            continue
        labels[i] = cluster
        queue = deque(neighbors[i])
        while queue:
            j = queue.popleft()
            if labels[j] == NOISE:
                labels[j] = cluster  # border point adopted by the cluster
            if labels[j] != UNVISITED:
                continue
            labels[j] = cluster
            if core[j]:
                queue.extend(neighbors[j])
        cluster += 1
    return labels


def dbscan_score(
    vectors: Sequence[EmbeddingVector] | np.ndarray, cfg: DbscanConfig
) -> np.ndarray:
    """Distance to the min_pts-th nearest neighbor, self included.

    min_pts beyond the point count yields +inf (nothing that far exists).
    """
    X = _as_matrix(vectors)
    n = X.shape[0]
    if cfg.min_pts > n:
        return np.full(n, np.inf)
    D2 = _kernels.pairwise_sq_dists(X)
    part = np.partition(D2, cfg.min_pts - 1, axis=1)
    return np.sqrt(part[:, cfg.min_pts - 1])
