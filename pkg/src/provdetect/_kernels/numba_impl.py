"""Numba-jitted kernel implementations (fast path).

Same contracts as numpy_impl; loops here, vectorization there.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def pairwise_sq_dists(X: np.ndarray) -> np.ndarray:
    n, d = X.shape
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            s = 0.0
            for k in range(d):
                diff = X[i, k] - X[j, k]
                s += diff * diff
            D[i, j] = s
            D[j, i] = s
    return D


@njit(cache=True)
def perplexity_search(D2, target_entropy, tol=1e-6, max_iter=200):
    n = D2.shape[0]
    P = np.zeros((n, n))
    betas = np.ones(n)
    row = np.empty(n - 1)
    d = np.empty(n - 1)
    for i in range(n):
        k = 0
        for j in range(n):
            if j != i:
                d[k] = D2[i, j]
                k += 1
        beta = 1.0
        lo = -np.inf
        hi = np.inf
        for _ in range(max_iter):
            m = -beta * d[0]
            for j in range(1, n - 1):
                v = -beta * d[j]
                if v > m:
                    m = v
            total = 0.0
            for j in range(n - 1):
                row[j] = np.exp(-beta * d[j] - m)
                total += row[j]
            entropy = 0.0
            for j in range(n - 1):
                row[j] /= total
                if row[j] > 0.0:
                    entropy -= row[j] * np.log(row[j])
            diff = entropy - target_entropy
            if abs(diff) <= tol:
                break
            if diff > 0.0:
                lo = beta
                beta = beta * 2.0 if hi == np.inf else (beta + hi) / 2.0
            else:
                hi = beta
                beta = beta / 2.0 if lo == -np.inf else (beta + lo) / 2.0
        for j in range(n - 1):
            if j < i:
                P[i, j] = row[j]
            else:
                P[i, j + 1] = row[j]
        betas[i] = beta
    return P, betas


@njit(cache=True)
def tsne_forces(P_eff, P_plain, Y):
    n = Y.shape[0]
    num = np.zeros((n, n))
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            dy0 = Y[i, 0] - Y[j, 0]
            dy1 = Y[i, 1] - Y[j, 1]
            v = 1.0 / (1.0 + dy0 * dy0 + dy1 * dy1)
            num[i, j] = v
            num[j, i] = v
            total += 2.0 * v
    grad = np.zeros((n, 2))
    kl = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            q = num[i, j] / total
            if q < 1e-12:
                q = 1e-12
            w = (P_eff[i, j] - q) * num[i, j]
            grad[i, 0] += 4.0 * w * (Y[i, 0] - Y[j, 0])
            grad[i, 1] += 4.0 * w * (Y[i, 1] - Y[j, 1])
            if P_plain[i, j] > 0.0:
                kl += P_plain[i, j] * np.log(P_plain[i, j] / q)
    return grad, kl


@njit(cache=True)
def iforest_depths(feature, threshold, left, right, adjust, X):
    n = X.shape[0]
    out = np.empty(n)
    for i in range(n):
        node = 0
        depth = 0.0
        while feature[node] >= 0:
            if X[i, feature[node]] < threshold[node]:
                node = left[node]
            else:
                node = right[node]
            depth += 1.0
        out[i] = depth + adjust[node]
    return out
