"""Exact (quadratic) t-SNE for projecting embeddings to 2-D.

Affinities come from a per-point binary search matching the Shannon
entropy of the conditional distribution to log(perplexity) nats, then
symmetrization P = (P_cond + P_cond^T) / (2n) with a 1e-12 floor. The
embedding minimizes KL(P || Q) for a Student-t Q by gradient descent
with early exaggeration (x12 for the first 250 iterations), momentum
0.5 switching to 0.8 at iteration 250, and per-coordinate adaptive
gains. The reported objective trace always uses the plain P, and every
run is deterministic under its seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import _kernels
from ..errors import ValidationError

EXAGGERATION = 12.0
EXAGGERATION_ITERS = 250
MOMENTUM_EARLY = 0.5
MOMENTUM_LATE = 0.8


@dataclass(frozen=True)
class TsneConfig:
    perplexity: float = 30.0
    iterations: int = 1000
    learning_rate: float = 200.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.perplexity < 2.0:
            raise ValidationError(
                f"perplexity must be >= 2, got {self.perplexity}"
            )
        if self.iterations < 1:
            raise ValidationError(
                f"iterations must be >= 1, got {self.iterations}"
            )
        if self.learning_rate <= 0.0:
            raise ValidationError(
                f"learning rate must be > 0, got {self.learning_rate}"
            )


@dataclass(frozen=True)
class TsneResult:
    coords: np.ndarray  # (n, 2)
    kl_trace: np.ndarray  # objective value per iteration (plain P)
    betas: np.ndarray  # per-point precisions from the entropy search


def conditional_affinities(
    X: np.ndarray, perplexity: float, tol: float = 1e-8
) -> tuple[np.ndarray, np.ndarray]:
    """Row-conditional affinities whose entropy matches log(perplexity).

    Returns (P_cond, betas); each row of P_cond sums to 1 with a zero
    diagonal.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    D2 = _kernels.pairwise_sq_dists(X)
    return _kernels.perplexity_search(D2, math.log(perplexity), tol)


def joint_affinities(P_cond: np.ndarray) -> np.ndarray:
    n = P_cond.shape[0]
    P = (P_cond + P_cond.T) / (2.0 * n)
    return np.maximum(P, 1e-12)


def tsne_full(X: np.ndarray, cfg: TsneConfig = TsneConfig()) -> TsneResult:
    """Run the full optimization and keep the objective trace."""
    X = np.ascontiguousarray(np.atleast_2d(X), dtype=np.float64)
    n = X.shape[0]
    if n < 10:
        raise ValidationError(f"need at least 10 points, got {n}")
    if cfg.perplexity >= (n - 1) / 3.0:
        raise ValidationError(
            f"perplexity {cfg.perplexity} too large for {n} points "
            f"(must be < (n - 1) / 3)"
        )

    P_cond, betas = conditional_affinities(X, cfg.perplexity)
    P = joint_affinities(P_cond)

    rng = np.random.default_rng(cfg.seed)
    Y = rng.standard_normal((n, 2)) * 1e-4
    update = np.zeros_like(Y)
    gains = np.ones_like(Y)
    trace = np.zeros(cfg.iterations)

    for it in range(cfg.iterations):
        exaggerating = it < EXAGGERATION_ITERS
        P_eff = P * EXAGGERATION if exaggerating else P
        grad, kl = _kernels.tsne_forces(P_eff, P, Y)
        trace[it] = kl

        same_sign = np.sign(grad) == np.sign(update)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        np.maximum(gains, 0.01, out=gains)
        momentum = MOMENTUM_EARLY if exaggerating else MOMENTUM_LATE
        update = momentum * update - cfg.learning_rate * gains * grad
        Y = Y + update
        Y -= Y.mean(axis=0)
    return TsneResult(coords=Y, kl_trace=trace, betas=betas)


def tsne(X: np.ndarray, cfg: TsneConfig = TsneConfig()) -> np.ndarray:
    """2-D embedding of the rows of X (see tsne_full for the trace)."""
    return tsne_full(X, cfg).coords
