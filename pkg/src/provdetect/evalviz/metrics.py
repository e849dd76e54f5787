"""Ranking metrics: exact AUC and the ROC curve it integrates.

AUC is the Mann-Whitney statistic — the fraction of (attack, normal)
pairs ranked correctly, ties counted half — computed by grouping tied
scores, so it is exact (sums of integers and halves) rather than a
trapezoid approximation. The ROC sweep visits each distinct score as a
threshold (predict positive iff score >= threshold) plus two sentinel
endpoints, so its trapezoid area equals the AUC to float precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import ValidationError


def _to_arrays(
    scores: Sequence[float] | np.ndarray, labels: Sequence[int] | np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.ndim != 1 or y.shape != s.shape:
        raise ValidationError(
            f"scores and labels must be equal-length 1-D, got {s.shape} and {y.shape}"
        )
    if not np.all(np.isfinite(s)):
        raise ValidationError("scores must be finite")
    y = y.astype(np.int64)
    if not np.all((y == 0) | (y == 1)):
        raise ValidationError("labels must be 0 (normal) or 1 (attack)")
    if y.sum() == 0 or y.sum() == y.size:
        raise ValidationError("AUC needs both classes present")
    return s, y


def auc(
    scores: Sequence[float] | np.ndarray, labels: Sequence[int] | np.ndarray
) -> float:
    """Probability a random attack outscores a random normal, ties at 0.5."""
    s, y = _to_arrays(scores, labels)
    order = np.argsort(s, kind="stable")
    s = s[order]
    y = y[order]
    pos_total = int(y.sum())
    neg_total = int(y.size - pos_total)

    numerator = 0.0
    neg_below = 0
    i = 0
    n = s.size
    while i < n:
        j = i
        while j < n and s[j] == s[i]:
            j += 1
        group_pos = int(y[i:j].sum())
        group_neg = (j - i) - group_pos
        numerator += group_pos * neg_below + 0.5 * group_pos * group_neg
        neg_below += group_neg
        i = j
    return numerator / (pos_total * neg_total)


@dataclass(frozen=True)
class RocCurve:
    """Operating points swept over thresholds, plus the exact AUC.

    Rows are (fpr, tpr, threshold): the first is (0, 0, +inf), the last
    (1, 1, -inf), with one point per distinct score in between
    (descending). fpr and tpr are non-decreasing.
    """

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float

    def __post_init__(self) -> None:
        if np.any(np.diff(self.fpr) < 0.0) or np.any(np.diff(self.tpr) < 0.0):
            raise ValidationError("ROC points must be non-decreasing")
        if (self.fpr[0], self.tpr[0]) != (0.0, 0.0):
            raise ValidationError("ROC must start at (0, 0)")
        if (self.fpr[-1], self.tpr[-1]) != (1.0, 1.0):
            raise ValidationError("ROC must end at (1, 1)")

    def trapezoid_area(self) -> float:
        widths = self.fpr[1:] - self.fpr[:-1]
        heights = (self.tpr[1:] + self.tpr[:-1]) / 2.0
        return float(np.sum(widths * heights))


def roc_curve(
    scores: Sequence[float] | np.ndarray, labels: Sequence[int] | np.ndarray
) -> RocCurve:
    s, y = _to_arrays(scores, labels)
    pos_total = int(y.sum())
    neg_total = int(y.size - pos_total)

    order = np.argsort(-s, kind="stable")
    s_desc = s[order]
    y_desc = y[order]
    distinct_last = np.flatnonzero(
        np.append(s_desc[1:] != s_desc[:-1], True)
    )
    tp_cum = np.cumsum(y_desc)
    fp_cum = np.cumsum(1 - y_desc)

    fpr = [0.0]
    tpr = [0.0]
    thresholds = [np.inf]
    for idx in distinct_last:
        fpr.append(fp_cum[idx] / neg_total)
        tpr.append(tp_cum[idx] / pos_total)
        thresholds.append(float(s_desc[idx]))
    fpr.append(1.0)
    tpr.append(1.0)
    thresholds.append(-np.inf)

    return RocCurve(
        fpr=np.asarray(fpr),
        tpr=np.asarray(tpr),
        thresholds=np.asarray(thresholds),
        auc=auc(scores, labels),
    )


def roc_to_csv(curve: RocCurve, path: str | Path) -> None:
    """Write ``threshold,fpr,tpr`` rows in sweep order."""
    lines = ["threshold,fpr,tpr"]
    for t, f, tp in zip(curve.thresholds, curve.fpr, curve.tpr):
        lines.append(f"{float(t)!r},{float(f)!r},{float(tp)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
