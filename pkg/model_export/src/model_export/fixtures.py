"""Golden embedding fixtures for cross-backend parity tests.

Reference vectors are computed with torch eager evaluation of the same
weights the export used, mean-pooled over the real (unpadded) tokens, and
stored as full-precision decimal text in fixtures.jsonl. Any independent
evaluation of the exported artifacts must reproduce them to cosine 0.999
or better.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .catalog import get_spec
from .corpus import CANONICAL_SENTENCE, fixture_sentences
from .exporter import ExportError, build_torch_model, read_manifest

MIN_FIXTURES = 21


@dataclass(frozen=True)
class GoldenFixture:
    sentence: str
    model_id: str
    pooling: str
    vector: tuple[float, ...]


def reference_embeddings(
    model,
    tokenizer,
    sentences: list[str],
    sequence_length: int,
    pad_id: int,
    needs_token_type_ids: bool,
) -> np.ndarray:
    """Mean-pooled sentence vectors from torch eager evaluation."""
    import torch

    encodings = [tokenizer.encode(s).ids[:sequence_length] for s in sentences]
    n = len(sentences)
    ids = np.full((n, sequence_length), pad_id, dtype=np.int64)
    mask = np.zeros((n, sequence_length), dtype=np.int64)
    for row, enc in enumerate(encodings):
        ids[row, : len(enc)] = enc
        mask[row, : len(enc)] = 1
    kwargs = {
        "input_ids": torch.from_numpy(ids),
        "attention_mask": torch.from_numpy(mask),
    }
    if needs_token_type_ids:
        kwargs["token_type_ids"] = torch.zeros_like(kwargs["input_ids"])
    with torch.no_grad():
        hidden = model(**kwargs, return_dict=False)[0].numpy()
    weights = mask[:, :, None].astype(np.float64)
    return (hidden * weights).sum(axis=1) / weights.sum(axis=1)


def emit_fixtures(
    out_dir: str | Path, sentences: list[str] | None = None
) -> list[GoldenFixture]:
    """Write fixtures.jsonl next to an exported model; returns the fixtures."""
    out_dir = Path(out_dir)
    manifest = read_manifest(out_dir)
    spec = get_spec(manifest.model_id)
    if sentences is None:
        sentences = fixture_sentences(count=24)
    if CANONICAL_SENTENCE not in sentences:
        raise ExportError("fixture set must include the canonical sentence")
    if len(sentences) < MIN_FIXTURES:
        raise ExportError(
            f"need at least {MIN_FIXTURES} fixture sentences, got {len(sentences)}"
        )

    from tokenizers import Tokenizer

    tokenizer = Tokenizer.from_file(str(out_dir / "tokenizer.json"))
    mode = "pretrained" if manifest.seed is None else "random-init"
    model, _ = build_torch_model(
        spec,
        mode,
        manifest.seed or 0,
        int(tokenizer.get_vocab_size()),
        manifest.sequence_length,
        manifest.num_layers,
    )
    vectors = reference_embeddings(
        model,
        tokenizer,
        sentences,
        manifest.sequence_length,
        manifest.pad_token_id,
        spec.needs_token_type_ids,
    )
    fixtures = []
    lines = []
    for sentence, vector in zip(sentences, vectors):
        if vector.shape != (manifest.dim,):
            raise ExportError(
                f"fixture vector has shape {vector.shape}, expected ({manifest.dim},)"
            )
        fixture = GoldenFixture(
            sentence=sentence,
            model_id=manifest.model_id,
            pooling=manifest.pooling,
            vector=tuple(float(v) for v in vector),
        )
        fixtures.append(fixture)
        lines.append(
            json.dumps(
                {
                    "sentence": fixture.sentence,
                    "model_id": fixture.model_id,
                    "pooling": fixture.pooling,
                    "vector": list(fixture.vector),
                },
                sort_keys=True,
            )
        )
    (out_dir / "fixtures.jsonl").write_text(
        "\n".join(lines) + "\n", encoding="utf-8"
    )
    return fixtures


def load_fixtures(out_dir: str | Path) -> list[GoldenFixture]:
    path = Path(out_dir) / "fixtures.jsonl"
    if not path.is_file():
        raise ExportError(f"no fixtures.jsonl under {out_dir}")
    fixtures = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        raw = json.loads(line)
        fixtures.append(
            GoldenFixture(
                sentence=raw["sentence"],
                model_id=raw["model_id"],
                pooling=raw["pooling"],
                vector=tuple(float(v) for v in raw["vector"]),
            )
        )
    return fixtures
