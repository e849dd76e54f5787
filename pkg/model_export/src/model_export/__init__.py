"""Transformer encoder export: ONNX graphs, tokenizer artifacts, and
golden embedding fixtures for cross-backend parity."""

from .catalog import CATALOG, ModelSpec, get_spec
from .corpus import CANONICAL_SENTENCE, fixture_sentences
from .exporter import (
    ExportError,
    ExportManifest,
    export_model,
    read_manifest,
)
from .fixtures import (
    MIN_FIXTURES,
    GoldenFixture,
    emit_fixtures,
    load_fixtures,
)

__all__ = [
    "CANONICAL_SENTENCE",
    "CATALOG",
    "ExportError",
    "ExportManifest",
    "GoldenFixture",
    "MIN_FIXTURES",
    "ModelSpec",
    "emit_fixtures",
    "export_model",
    "fixture_sentences",
    "get_spec",
    "load_fixtures",
    "read_manifest",
]
