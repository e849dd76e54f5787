"""The embedding-by-variant evaluation grid.

Each cell pairs one embedding backend with one autoencoder variant:
train on the normal rows minus a held-out slice, score the attacks plus
the held-out normals, and record the AUC. Cell seeds derive from the
master seed and the (llm, variant) coordinates through a keyed hash, so
each cell is reproducible in isolation and reruns are byte-identical. A
failed cell records its error and the rest of the grid continues.
"""

from __future__ import annotations

import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from ..autoenc import VARIANTS, TrainConfig, build_model, train
from ..dataset import ATTACK, AspectDataset
from ..detect import score_all
from ..embedder import (
    EmbedderBackend,
    EmbedderConfig,
    EmbeddingVector,
    default_pooling,
    embed_all,
    make_backend,
)
from ..errors import ValidationError
from ..textify import IDENTITY_PHRASES, PhraseMap, dataset_to_sentences
from .metrics import auc

logger = logging.getLogger(__name__)


def derive_seed(*parts: object) -> int:
    """Stable 64-bit seed from mixed parts via a keyed blake2b digest."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(repr(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "big")


@dataclass(frozen=True)
class EmbedSpec:
    """One embedding column of the grid.

    pooling None means "whatever the model id implies"; see
    ``default_pooling``.
    """

    model_id: str
    dim: int
    seed: int = 0
    pooling: str | None = None


@dataclass(frozen=True)
class CellEval:
    """Outcome of one (llm, variant) cell."""

    auc: float
    n_train: int
    n_eval: int
    n_attack: int


@dataclass
class GridResult:
    llm_ids: tuple[str, ...]
    variants: tuple[str, ...]
    cells: dict[tuple[str, str], CellEval] = field(default_factory=dict)
    errors: dict[tuple[str, str], str] = field(default_factory=dict)
    master_seed: int = 0

    def auc_or_nan(self, llm_id: str, variant: str) -> float:
        cell = self.cells.get((llm_id, variant))
        return cell.auc if cell is not None else float("nan")


def evaluate_detector(
    vectors: Sequence[EmbeddingVector],
    labels: Mapping[str, str],
    variant: str,
    seed: int,
    *,
    epochs: int = 100,
    batch_size: int = 64,
    hidden: Sequence[int] = (128,),
    latent_dim: int = 32,
    beta: float = 1.0,
    noise_sigma: float = 0.1,
    attention: bool = False,
    holdout_fraction: float = 0.2,
) -> CellEval:
    """Train one variant on normals and report AUC on attacks plus a
    held-out normal slice.

    The held-out slice is disjoint from the training rows; its size is
    round(holdout_fraction * n_normals), at least 1. Needs at least two
    normal rows and one attack row.
    """
    if not 0.0 < holdout_fraction < 1.0:
        raise ValidationError(
            f"holdout fraction must be in (0, 1), got {holdout_fraction}"
        )
    normal = [v for v in vectors if labels.get(v.process_id) != ATTACK]
    attack = [v for v in vectors if labels.get(v.process_id) == ATTACK]
    if len(normal) < 2:
        raise ValidationError(
            f"need at least 2 normal rows to split, got {len(normal)}"
        )
    if not attack:
        raise ValidationError("need at least one attack row to evaluate")

    holdout_rng = np.random.default_rng(
        np.random.SeedSequence([seed & (2**63 - 1), 0x401D])
    )
    n_hold = min(len(normal) - 1, max(1, round(len(normal) * holdout_fraction)))
    perm = holdout_rng.permutation(len(normal))
    hold_set = {normal[i].process_id for i in perm[:n_hold]}
    train_vecs = [v for v in normal if v.process_id not in hold_set]
    eval_vecs = [v for v in vectors if
                 labels.get(v.process_id) == ATTACK
                 or v.process_id in hold_set]

    dim = train_vecs[0].values.shape[0]
    model = build_model(
        variant,
        dim,
        hidden=hidden,
        latent_dim=latent_dim,
        beta=beta,
        noise_sigma=noise_sigma,
        attention=attention,
    )
    cfg = TrainConfig(epochs=epochs, batch_size=batch_size, seed=seed)
    train(model, train_vecs, cfg)

    scores = score_all(model, eval_vecs)
    y = [1 if labels.get(s.process_id) == ATTACK else 0 for s in scores]
    value = auc([s.r for s in scores], y)
    return CellEval(
        auc=value,
        n_train=len(train_vecs),
        n_eval=len(eval_vecs),
        n_attack=len(attack),
    )


def run_grid(
    ds: AspectDataset,
    embed_specs: Sequence[EmbedSpec],
    variants: Sequence[str] = VARIANTS,
    *,
    master_seed: int = 0,
    phrases: PhraseMap = IDENTITY_PHRASES,
    epochs: int = 100,
    batch_size: int = 64,
    hidden: Sequence[int] = (128,),
    latent_dim: int = 32,
    beta: float = 1.0,
    noise_sigma: float = 0.1,
    attention: bool = False,
    holdout_fraction: float = 0.2,
    jobs: int = 1,
    backend_factory: Callable[[EmbedSpec], EmbedderBackend] | None = None,
) -> GridResult:
    """Evaluate every (embedding, variant) pair on one dataset.

    Embeddings are computed once per column and shared across that
    column's cells. ``jobs`` > 1 runs cells in a thread pool; results are
    keyed by coordinates so ordering never depends on completion order.
    """
    if not embed_specs:
        raise ValidationError("grid needs at least one embedding spec")
    if not variants:
        raise ValidationError("grid needs at least one variant")
    for v in variants:
        if v not in VARIANTS:
            raise ValidationError(f"unknown variant {v!r}")
    factory = backend_factory or (
        lambda spec: make_backend(spec.model_id, spec.dim, seed=spec.seed)
    )

    sentences = dataset_to_sentences(ds, phrases)
    labels = ds.labels()
    result = GridResult(
        llm_ids=tuple(s.model_id for s in embed_specs),
        variants=tuple(variants),
        master_seed=master_seed,
    )
    if len(set(result.llm_ids)) != len(result.llm_ids):
        raise ValidationError("embedding model ids must be distinct")

    columns: dict[str, list[EmbeddingVector]] = {}
    for spec in embed_specs:
        try:
            backend = factory(spec)
            cfg = EmbedderConfig(
                model_id=backend.model_id,
                dim=spec.dim,
                pooling=spec.pooling or default_pooling(backend.model_id),
            )
            columns[spec.model_id] = embed_all(sentences, cfg, backend)
        except Exception as exc:  # noqa: BLE001 - column failure is recorded
            logger.warning("embedding column %s failed: %s", spec.model_id, exc)
            for v in variants:
                result.errors[(spec.model_id, v)] = str(exc)

    def run_cell(llm_id: str, variant: str) -> None:
        seed = derive_seed(master_seed, llm_id, variant)
        try:
            result.cells[(llm_id, variant)] = evaluate_detector(
                columns[llm_id],
                labels,
                variant,
                seed,
                epochs=epochs,
                batch_size=batch_size,
                hidden=hidden,
                latent_dim=latent_dim,
                beta=beta,
                noise_sigma=noise_sigma,
                attention=attention,
                holdout_fraction=holdout_fraction,
            )
        except Exception as exc:  # noqa: BLE001 - cell failure is recorded
            logger.warning("cell (%s, %s) failed: %s", llm_id, variant, exc)
            result.errors[(llm_id, variant)] = str(exc)

    pending = [
        (spec.model_id, v)
        for spec in embed_specs
        if spec.model_id in columns
        for v in variants
    ]
    if jobs > 1 and len(pending) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(lambda cv: run_cell(*cv), pending))
    else:
        for llm_id, variant in pending:
            run_cell(llm_id, variant)
    return result


def best_cell(result: GridResult) -> tuple[str, str, float]:
    """Highest-AUC cell; ties break on lexicographic (llm, variant)."""
    if not result.cells:
        raise ValidationError("every grid cell failed; nothing to rank")
    ranked = sorted(
        result.cells.items(), key=lambda kv: (-kv[1].auc, kv[0][0], kv[0][1])
    )
    (llm_id, variant), cell = ranked[0]
    return llm_id, variant, cell.auc


def heatmap_csv(result: GridResult, path: str | Path) -> None:
    """Write ``variant,<llm...>`` rows with AUC at 4 decimals (nan for
    failed cells)."""
    header = "variant," + ",".join(result.llm_ids)
    lines = [header]
    for variant in result.variants:
        cells = [
            format(result.auc_or_nan(llm, variant), ".4f")
            for llm in result.llm_ids
        ]
        lines.append(f"{variant}," + ",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
