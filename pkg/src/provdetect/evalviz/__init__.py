"""Evaluation and visualization: metrics, the embedding-variant grid,
t-SNE projection, and report rendering."""

from .grid import (
    CellEval,
    EmbedSpec,
    GridResult,
    best_cell,
    derive_seed,
    evaluate_detector,
    heatmap_csv,
    run_grid,
)
from .metrics import RocCurve, auc, roc_curve, roc_to_csv
from .reports import (
    emit_reports,
    heatmap_svg,
    loss_csv,
    loss_svg,
    roc_svg,
    scatter_csv,
    scatter_svg,
)
from .tsne import TsneConfig, TsneResult, tsne, tsne_full

__all__ = [
    "CellEval",
    "EmbedSpec",
    "GridResult",
    "RocCurve",
    "TsneConfig",
    "TsneResult",
    "auc",
    "best_cell",
    "derive_seed",
    "emit_reports",
    "evaluate_detector",
    "heatmap_csv",
    "heatmap_svg",
    "loss_csv",
    "loss_svg",
    "roc_curve",
    "roc_svg",
    "roc_to_csv",
    "run_grid",
    "scatter_csv",
    "scatter_svg",
    "tsne",
    "tsne_full",
]
