"""Pure-numpy kernel implementations (fallback path).

Function contracts are shared with numba_impl; keep the two in sync.
"""

from __future__ import annotations

import numpy as np


def pairwise_sq_dists(X: np.ndarray) -> np.ndarray:
    """All-pairs squared Euclidean distances, zero diagonal, clipped >= 0."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    sq = np.einsum("ij,ij->i", X, X)
    D = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(D, 0.0, out=D)
    np.fill_diagonal(D, 0.0)
    return D


def perplexity_search(
    D2: np.ndarray, target_entropy: float, tol: float = 1e-6, max_iter: int = 200
) -> tuple[np.ndarray, np.ndarray]:
    """Per-row precision (beta) search for conditional t-SNE affinities.

    For each row i, binary-search beta_i so that the Shannon entropy (nats)
    of p_{j|i} ~ exp(-beta_i * D2[i, j]) matches ``target_entropy`` within
    ``tol``. Returns (P, betas) where P rows are the conditional
    distributions (diagonal zero, each row summing to 1).
    """
    n = D2.shape[0]
    P = np.zeros((n, n))
    betas = np.ones(n)
    for i in range(n):
        d = np.delete(D2[i], i)
        beta, lo, hi = 1.0, -np.inf, np.inf
        row = None
        for _ in range(max_iter):
            logits = -beta * d
            logits -= logits.max()
            row = np.exp(logits)
            total = row.sum()
            row /= total
            nz = row > 0.0
            entropy = -np.sum(row[nz] * np.log(row[nz]))
            diff = entropy - target_entropy
            if abs(diff) <= tol:
                break
            if diff > 0.0:  # too flat: increase precision
                lo = beta
                beta = beta * 2.0 if hi == np.inf else (beta + hi) / 2.0
            else:
                hi = beta
                beta = beta / 2.0 if lo == -np.inf else (beta + lo) / 2.0
        P[i, :i] = row[:i]
        P[i, i + 1 :] = row[i:]
        betas[i] = beta
    return P, betas


def tsne_forces(
    P_eff: np.ndarray, P_plain: np.ndarray, Y: np.ndarray
) -> tuple[np.ndarray, float]:
    """Gradient of KL(P_eff || Q) at embedding Y, plus KL(P_plain || Q).

    Q is the Student-t joint over Y. P_eff may carry early exaggeration;
    the reported objective always uses the plain P.
    """
    n = Y.shape[0]
    diff = Y[:, None, :] - Y[None, :, :]
    num = 1.0 / (1.0 + np.einsum("ijk,ijk->ij", diff, diff))
    np.fill_diagonal(num, 0.0)
    Q = num / num.sum()
    np.clip(Q, 1e-12, None, out=Q)

    W = (P_eff - Q) * num
    grad = 4.0 * (np.einsum("ij,ijk->ik", W, diff))

    mask = P_plain > 0.0
    kl = float(np.sum(P_plain[mask] * np.log(P_plain[mask] / Q[mask])))
    return grad, kl


def iforest_depths(
    feature: np.ndarray,
    threshold: np.ndarray,
    left: np.ndarray,
    right: np.ndarray,
    adjust: np.ndarray,
    X: np.ndarray,
) -> np.ndarray:
    """Path lengths through one array-encoded isolation tree.

    ``feature[k] < 0`` marks node k as a leaf whose ``adjust[k]`` holds the
    c(leaf_size) truncation credit. Returns depth + adjust per point.
    """
    n = X.shape[0]
    node = np.zeros(n, dtype=np.int64)
    depth = np.zeros(n)
    active = feature[node] >= 0
    while active.any():
        idx = np.nonzero(active)[0]
        cur = node[idx]
        f = feature[cur]
        go_left = X[idx, f] < threshold[cur]
        node[idx] = np.where(go_left, left[cur], right[cur])
        depth[idx] += 1.0
        active[idx] = feature[node[idx]] >= 0
    return depth + adjust[node]
