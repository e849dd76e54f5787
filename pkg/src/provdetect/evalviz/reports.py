"""Report artifacts: CSV tables and small standalone SVG figures.

Four figure kinds: the AUC heatmap over the evaluation grid, an ROC
curve, a score scatter with the threshold line, and train/validation
loss curves. The SVG output is plain 1.1 markup with no external
references, deterministic for identical inputs.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from ..detect import AnomalyScore, Threshold
from ..errors import ValidationError
from .grid import GridResult
from .metrics import RocCurve

_FONT = "font-family=\"sans-serif\""


def _svg(width: int, height: int, body: list[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    )
    return "\n".join([head, *body, "</svg>"]) + "\n"


def _text(x: float, y: float, s: str, size: int = 12, anchor: str = "start") -> str:
    return (
        f'<text x="{x:.1f}" y="{y:.1f}" font-size="{size}" '
        f'text-anchor="{anchor}" {_FONT}>{escape(s)}</text>'
    )


def _shade(value: float) -> str:
    """Blue ramp for values in [0, 1]; grey for non-finite."""
    if not math.isfinite(value):
        return "#cccccc"
    v = min(1.0, max(0.0, value))
    r = int(247 - 180 * v)
    g = int(251 - 140 * v)
    b = 255
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap_svg(result: GridResult, path: str | Path) -> None:
    """Grid of shaded, value-annotated AUC cells."""
    cell_w, cell_h = 110, 44
    left, top = 70, 40
    width = left + cell_w * len(result.llm_ids) + 20
    height = top + cell_h * len(result.variants) + 20
    body: list[str] = [_text(left, 24, "AUC by embedding and variant", 14)]
    for c, llm in enumerate(result.llm_ids):
        body.append(
            _text(left + c * cell_w + cell_w / 2, top - 8, llm, 11, "middle")
        )
    for r, variant in enumerate(result.variants):
        y = top + r * cell_h
        body.append(_text(left - 8, y + cell_h / 2 + 4, variant, 11, "end"))
        for c, llm in enumerate(result.llm_ids):
            x = left + c * cell_w
            value = result.auc_or_nan(llm, variant)
            body.append(
                f'<rect x="{x}" y="{y}" width="{cell_w}" height="{cell_h}" '
                f'fill="{_shade(value)}" stroke="#444" stroke-width="1"/>'
            )
            label = "n/a" if not math.isfinite(value) else f"{value:.4f}"
            body.append(
                _text(x + cell_w / 2, y + cell_h / 2 + 4, label, 12, "middle")
            )
    Path(path).write_text(_svg(width, height, body), encoding="utf-8")


def _axes(
    left: float, top: float, plot_w: float, plot_h: float,
    x_label: str, y_label: str,
) -> list[str]:
    x0, y0 = left, top + plot_h
    return [
        f'<line x1="{x0}" y1="{y0}" x2="{x0 + plot_w}" y2="{y0}" '
        f'stroke="#000" stroke-width="1"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{top}" '
        f'stroke="#000" stroke-width="1"/>',
        _text(x0 + plot_w / 2, y0 + 32, x_label, 12, "middle"),
        _text(16, top + plot_h / 2, y_label, 12, "middle"),
    ]


def roc_svg(curve: RocCurve, path: str | Path) -> None:
    left, top, plot_w, plot_h = 60, 30, 320, 320
    pts = " ".join(
        f"{left + f * plot_w:.2f},{top + (1.0 - t) * plot_h:.2f}"
        for f, t in zip(curve.fpr, curve.tpr)
    )
    body = [
        _text(left, 20, f"ROC (AUC = {curve.auc:.4f})", 14),
        *_axes(left, top, plot_w, plot_h, "false positive rate",
               "true positive rate"),
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" '
        f'y2="{top}" stroke="#999" stroke-dasharray="4,4" stroke-width="1"/>',
        f'<polyline points="{pts}" fill="none" stroke="#1f77b4" '
        f'stroke-width="2"/>',
    ]
    Path(path).write_text(
        _svg(left + plot_w + 30, top + plot_h + 50, body), encoding="utf-8"
    )


def scatter_csv(
    scores: Sequence[AnomalyScore], threshold: Threshold, path: str | Path
) -> None:
    """Write ``index,score,flag`` rows in scoring order."""
    lines = ["index,score,flag"]
    for i, s in enumerate(scores):
        lines.append(f"{i},{s.r!r},{1 if s.r > threshold.tau else 0}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def scatter_svg(
    scores: Sequence[AnomalyScore], threshold: Threshold, path: str | Path
) -> None:
    """Score-by-index scatter with the threshold drawn as a line."""
    if not scores:
        raise ValidationError("nothing to plot: no scores")
    left, top, plot_w, plot_h = 60, 30, 420, 280
    values = np.asarray([s.r for s in scores])
    hi = float(max(values.max(), threshold.tau)) or 1.0
    lo = 0.0
    span = (hi - lo) or 1.0

    def sy(v: float) -> float:
        return top + (1.0 - (v - lo) / span) * plot_h

    def sx(i: int) -> float:
        return left + (i / max(1, len(scores) - 1)) * plot_w

    body = [
        _text(left, 20, "reconstruction error by process", 14),
        *_axes(left, top, plot_w, plot_h, "process index", "score"),
    ]
    ty = sy(threshold.tau)
    body.append(
        f'<line x1="{left}" y1="{ty:.2f}" x2="{left + plot_w}" y2="{ty:.2f}" '
        f'stroke="#d62728" stroke-dasharray="6,3" stroke-width="1.5"/>'
    )
    body.append(
        _text(left + plot_w - 4, ty - 6, f"tau = {threshold.tau:.4g}", 11, "end")
    )
    for i, s in enumerate(scores):
        color = "#d62728" if s.r > threshold.tau else "#1f77b4"
        body.append(
            f'<circle cx="{sx(i):.2f}" cy="{sy(s.r):.2f}" r="2.5" '
            f'fill="{color}" fill-opacity="0.8"/>'
        )
    Path(path).write_text(
        _svg(left + plot_w + 30, top + plot_h + 50, body), encoding="utf-8"
    )


def loss_csv(
    train_losses: Sequence[float],
    val_losses: Sequence[float],
    path: str | Path,
) -> None:
    """Write ``epoch,train_loss,val_loss`` rows (epochs start at 1)."""
    if len(train_losses) != len(val_losses):
        raise ValidationError("loss curves must be equal-length")
    lines = ["epoch,train_loss,val_loss"]
    for e, (tr, va) in enumerate(zip(train_losses, val_losses), start=1):
        lines.append(f"{e},{tr!r},{va!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def loss_svg(
    train_losses: Sequence[float],
    val_losses: Sequence[float],
    path: str | Path,
) -> None:
    if not train_losses or len(train_losses) != len(val_losses):
        raise ValidationError("loss curves must be equal-length and non-empty")
    left, top, plot_w, plot_h = 60, 30, 420, 280
    all_vals = np.asarray([*train_losses, *val_losses], dtype=np.float64)
    hi = float(all_vals.max()) or 1.0
    lo = min(0.0, float(all_vals.min()))
    span = (hi - lo) or 1.0
    n = len(train_losses)

    def pts(vals: Sequence[float]) -> str:
        return " ".join(
            f"{left + (i / max(1, n - 1)) * plot_w:.2f},"
            f"{top + (1.0 - (v - lo) / span) * plot_h:.2f}"
            for i, v in enumerate(vals)
        )

    body = [
        _text(left, 20, "loss per epoch", 14),
        *_axes(left, top, plot_w, plot_h, "epoch", "loss"),
        f'<polyline points="{pts(train_losses)}" fill="none" '
        f'stroke="#1f77b4" stroke-width="2"/>',
        f'<polyline points="{pts(val_losses)}" fill="none" '
        f'stroke="#ff7f0e" stroke-width="2"/>',
        _text(left + plot_w - 4, top + 12, "train", 11, "end"),
        _text(left + plot_w - 4, top + 26, "val", 11, "end"),
    ]
    Path(path).write_text(
        _svg(left + plot_w + 30, top + plot_h + 50, body), encoding="utf-8"
    )


def emit_reports(
    out_dir: str | Path,
    *,
    grid: GridResult | None = None,
    roc: RocCurve | None = None,
    scores: Sequence[AnomalyScore] | None = None,
    threshold: Threshold | None = None,
    train_losses: Sequence[float] | None = None,
    val_losses: Sequence[float] | None = None,
) -> list[Path]:
    """Write every report pair (CSV + SVG) for the inputs provided.

    Returns the list of files written. CSVs are the ground truth; the
    SVGs render them.
    """
    from .grid import heatmap_csv
    from .metrics import roc_to_csv

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if grid is not None:
        heatmap_csv(grid, out / "heatmap.csv")
        heatmap_svg(grid, out / "heatmap.svg")
        written += [out / "heatmap.csv", out / "heatmap.svg"]
    if roc is not None:
        roc_to_csv(roc, out / "roc.csv")
        roc_svg(roc, out / "roc.svg")
        written += [out / "roc.csv", out / "roc.svg"]
    if scores is not None:
        if threshold is None:
            raise ValidationError("score scatter needs a threshold")
        scatter_csv(scores, threshold, out / "scatter.csv")
        scatter_svg(scores, threshold, out / "scatter.svg")
        written += [out / "scatter.csv", out / "scatter.svg"]
    if train_losses is not None:
        if val_losses is None or len(val_losses) != len(train_losses):
            raise ValidationError("loss curves must be equal-length")
        loss_csv(train_losses, val_losses, out / "loss.csv")
        loss_svg(train_losses, val_losses, out / "loss.svg")
        written += [out / "loss.csv", out / "loss.svg"]
    if not written:
        raise ValidationError("emit_reports called with nothing to write")
    return written
