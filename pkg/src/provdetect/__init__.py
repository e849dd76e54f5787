"""Anomalous-process detection from provenance traces.

Pipeline: boolean process-attribute matrices become natural-language
sentences, sentences become embedding vectors, an autoencoder learns the
normal vectors, and processes whose reconstruction error exceeds a
percentile threshold are flagged. Evaluation utilities cover AUC/ROC,
an embedding-by-variant grid, t-SNE projection, and two classical
baselines.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .autoenc import (
    AeModel,
    DaeModel,
    TrainConfig,
    TrainReport,
    VaeModel,
    add_noise,
    ae_loss,
    build_model,
    kl_divergence,
    load_model,
    reparameterize,
    save_model,
    train,
    vae_loss,
)
from .baselines import (
    DbscanConfig,
    IsolationForestModel,
    dbscan_cluster,
    dbscan_score,
    default_eps,
    expected_path_length,
    iforest_fit,
    iforest_score,
    iforest_score_all,
)
from .dataset import (
    Aspect,
    AspectDataset,
    HostOs,
    ProcessRecord,
    Scenario,
    SyntheticConfig,
    generate_synthetic,
    imbalance_ratio,
    load_dataset,
    save_dataset,
    union_aspects,
)
from .detect import (
    AnomalyScore,
    Threshold,
    fixed_threshold,
    flag,
    flag_all,
    score,
    score_all,
    scores_from_csv,
    scores_to_csv,
    select_threshold,
)
from .embedder import (
    EmbedderConfig,
    EmbeddingVector,
    HashBackend,
    cache_header,
    cache_load,
    cache_store,
    default_pooling,
    embed,
    embed_all,
    hash_embed,
    make_backend,
    pool,
)
from .errors import (
    CacheError,
    EmbeddingError,
    ParseError,
    ProvdetectError,
    TrainingError,
    ValidationError,
)
from .evalviz import (
    EmbedSpec,
    GridResult,
    TsneConfig,
    auc,
    best_cell,
    evaluate_detector,
    roc_curve,
    run_grid,
    tsne,
)
from .textify import PhraseMap, Sentence, dataset_to_sentences, record_to_sentence

__all__ = [
    "AeModel",
    "AnomalyScore",
    "Aspect",
    "AspectDataset",
    "CacheError",
    "DaeModel",
    "DbscanConfig",
    "EmbedSpec",
    "EmbedderConfig",
    "EmbeddingError",
    "EmbeddingVector",
    "GridResult",
    "HashBackend",
    "HostOs",
    "IsolationForestModel",
    "ParseError",
    "PhraseMap",
    "ProcessRecord",
    "ProvdetectError",
    "Scenario",
    "Sentence",
    "SyntheticConfig",
    "Threshold",
    "TrainConfig",
    "TrainReport",
    "TrainingError",
    "TsneConfig",
    "VaeModel",
    "ValidationError",
    "add_noise",
    "ae_loss",
    "auc",
    "best_cell",
    "build_model",
    "cache_header",
    "cache_load",
    "cache_store",
    "dataset_to_sentences",
    "dbscan_cluster",
    "dbscan_score",
    "default_eps",
    "default_pooling",
    "embed",
    "embed_all",
    "evaluate_detector",
    "expected_path_length",
    "fixed_threshold",
    "flag",
    "flag_all",
    "generate_synthetic",
    "hash_embed",
    "iforest_fit",
    "iforest_score",
    "iforest_score_all",
    "imbalance_ratio",
    "kl_divergence",
    "load_dataset",
    "load_model",
    "make_backend",
    "pool",
    "record_to_sentence",
    "reparameterize",
    "roc_curve",
    "run_grid",
    "save_dataset",
    "save_model",
    "score",
    "scores_from_csv",
    "scores_to_csv",
    "score_all",
    "select_threshold",
    "train",
    "tsne",
    "union_aspects",
    "vae_loss",
]
