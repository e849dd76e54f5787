"""Reconstruction-error scoring and percentile thresholding.

The anomaly score of a vector is the squared L2 norm of its
reconstruction residual. A process is flagged iff its score is strictly
above the threshold; a score exactly at the threshold is never flagged.
The percentile threshold uses linear interpolation over the scores of
normal-labeled processes, so p = 95 over scores {1..100} gives
tau = 95.05.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dataset import ATTACK, NORMAL
from .embedder import EmbeddingVector
from .errors import ValidationError

METHOD_PERCENTILE = "percentile"
METHOD_FIXED = "fixed"


@dataclass(frozen=True)
class AnomalyScore:
    """Squared reconstruction error for one process."""

    process_id: str
    r: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.r):
            raise ValidationError(
                f"score for {self.process_id!r} is not finite: {self.r}"
            )
        if self.r < 0.0:
            raise ValidationError(
                f"score for {self.process_id!r} is negative: {self.r}"
            )


@dataclass(frozen=True)
class Threshold:
    """A flagging cutoff and how it was chosen."""

    tau: float
    method: str = METHOD_PERCENTILE
    percentile: float | None = None
    source_count: int = 0

    def __post_init__(self) -> None:
        if not np.isfinite(self.tau):
            raise ValidationError(f"threshold must be finite, got {self.tau}")
        if self.method not in (METHOD_PERCENTILE, METHOD_FIXED):
            raise ValidationError(f"unknown threshold method {self.method!r}")


def reconstruction_errors(model, X: np.ndarray) -> np.ndarray:
    """Row-wise squared L2 reconstruction error (batched)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    x_hat = model.reconstruct(X)
    diff = X - x_hat
    return np.sum(diff * diff, axis=-1)


def score(model, vector: EmbeddingVector) -> AnomalyScore:
    """Score one embedded process; a VAE reconstructs through z = mu."""
    r = reconstruction_errors(model, vector.values[None, :])[0]
    return AnomalyScore(vector.process_id, float(r))


def score_all(
    model, vectors: Sequence[EmbeddingVector], batch_size: int = 512
) -> list[AnomalyScore]:
    if not vectors:
        return []
    out: list[AnomalyScore] = []
    for start in range(0, len(vectors), batch_size):
        chunk = vectors[start : start + batch_size]
        X = np.stack([v.values for v in chunk])
        errs = reconstruction_errors(model, X)
        out.extend(
            AnomalyScore(v.process_id, float(r)) for v, r in zip(chunk, errs)
        )
    return out


def select_threshold(
    normal_scores: Sequence[float] | np.ndarray, percentile: float = 95.0
) -> Threshold:
    """Linear-interpolation percentile of the normal-score distribution."""
    arr = np.asarray(
        [s.r for s in normal_scores]
        if len(normal_scores) and isinstance(normal_scores[0], AnomalyScore)
        else normal_scores,
        dtype=np.float64,
    )
    if arr.size == 0:
        raise ValidationError("cannot pick a percentile of zero scores")
    if not 0.0 < percentile < 100.0:
        raise ValidationError(
            f"percentile must be in (0, 100), got {percentile}"
        )
    tau = float(np.percentile(arr, percentile, method="linear"))
    return Threshold(
        tau=tau,
        method=METHOD_PERCENTILE,
        percentile=float(percentile),
        source_count=int(arr.size),
    )


def fixed_threshold(tau: float) -> Threshold:
    return Threshold(tau=float(tau), method=METHOD_FIXED)


def flag(s: AnomalyScore, threshold: Threshold) -> int:
    """1 iff the score is strictly above tau."""
    return 1 if s.r > threshold.tau else 0


def flag_all(
    scores: Iterable[AnomalyScore], threshold: Threshold
) -> list[int]:
    return [flag(s, threshold) for s in scores]


def scores_to_csv(
    path: str | Path,
    scores: Sequence[AnomalyScore],
    threshold: Threshold,
    labels: Mapping[str, str],
) -> None:
    """Write ``process_id,score,flag,label`` rows in scoring order."""
    lines = ["process_id,score,flag,label"]
    for s in scores:
        label = labels.get(s.process_id, NORMAL)
        if label not in (NORMAL, ATTACK):
            raise ValidationError(
                f"unknown label {label!r} for {s.process_id!r}"
            )
        lines.append(f"{s.process_id},{s.r!r},{flag(s, threshold)},{label}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def scores_from_csv(path: str | Path) -> list[dict]:
    """Read rows written by scores_to_csv."""
    from .errors import ParseError

    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "process_id,score,flag,label":
        raise ParseError(f"{path}: missing scores header")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 4:
            raise ParseError(f"{path}:{lineno}: expected 4 columns")
        pid, score_s, flag_s, label = parts
        try:
            rows.append(
                {
                    "process_id": pid,
                    "score": float(score_s),
                    "flag": int(flag_s),
                    "label": label,
                }
            )
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from exc
    return rows
