"""Golden fixture emission: count, shape, round trip, self-consistency."""

from __future__ import annotations

import json

import numpy as np

from model_export import (
    CATALOG,
    CANONICAL_SENTENCE,
    MIN_FIXTURES,
    emit_fixtures,
    load_fixtures,
    read_manifest,
)


def test_fixture_count_and_canonical_sentence(export_root):
    for model_id in CATALOG:
        fixtures = load_fixtures(export_root / model_id)
        assert len(fixtures) >= MIN_FIXTURES
        assert any(f.sentence == CANONICAL_SENTENCE for f in fixtures)


def test_vector_length_matches_model_dim(export_root):
    for model_id in CATALOG:
        dim = read_manifest(export_root / model_id).dim
        for fixture in load_fixtures(export_root / model_id):
            assert len(fixture.vector) == dim
            assert fixture.model_id == model_id
            assert fixture.pooling == "mean"


def test_vectors_survive_the_decimal_text_round_trip(export_root):
    # one JSON object per line; floats must round-trip exactly
    path = export_root / "minilm" / "fixtures.jsonl"
    lines = path.read_text().splitlines()
    fixtures = load_fixtures(export_root / "minilm")
    assert len(lines) == len(fixtures)
    raw = json.loads(lines[0])
    assert tuple(raw["vector"]) == fixtures[0].vector


def test_emission_is_self_consistent(export_root):
    """Re-embedding the same sentences gives cosine 1.0 within 1e-7."""
    out = export_root / "minilm"
    before = load_fixtures(out)
    before_bytes = (out / "fixtures.jsonl").read_bytes()
    emit_fixtures(out)
    after = load_fixtures(out)
    for f0, f1 in zip(before, after):
        a = np.asarray(f0.vector)
        b = np.asarray(f1.vector)
        cos = float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))
        assert cos >= 1.0 - 1e-7
    assert (out / "fixtures.jsonl").read_bytes() == before_bytes
