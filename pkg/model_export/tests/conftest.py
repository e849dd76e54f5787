"""Shared fixture: one random-init export of every catalog model.

Exporting five encoders and emitting their fixtures takes a minute or
two, so it happens once per session and every test reads from the same
directory tree.
"""

from __future__ import annotations

from pathlib import Path

import pytest

from model_export import CATALOG, emit_fixtures, export_model


@pytest.fixture(scope="session")
def export_root(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("exports")
    for model_id in CATALOG:
        out = root / model_id
        export_model(model_id, out, mode="random-init", seed=0)
        emit_fixtures(out)
    return root
