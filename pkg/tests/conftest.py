"""Shared fixtures: small deterministic datasets and embeddings."""

from __future__ import annotations

import numpy as np
import pytest

from provdetect import (
    EmbedderConfig,
    SyntheticConfig,
    dataset_to_sentences,
    default_pooling,
    embed_all,
    generate_synthetic,
    make_backend,
)


@pytest.fixture(scope="session")
def small_dataset():
    """64 normal + 6 attack processes, clearly separable."""
    cfg = SyntheticConfig(
        n_normal=64,
        n_attack=6,
        n_attributes=24,
        normal_density=0.08,
        attack_signature_attributes=6,
        seed=11,
    )
    return generate_synthetic(cfg)


@pytest.fixture(scope="session")
def small_vectors(small_dataset):
    """Hash embeddings (d=32, sum-pooled) of the small dataset, in row order."""
    sentences = dataset_to_sentences(small_dataset)
    cfg = EmbedderConfig(
        model_id="hash-32-s7", dim=32, pooling=default_pooling("hash-32-s7")
    )
    backend = make_backend("hash-32-s7", 32, seed=7)
    return embed_all(sentences, cfg, backend)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260818)
