"""Sentence -> dense vector embedding behind a uniform backend contract.

A backend turns a sentence into per-token vectors; pooling (mean or cls)
collapses them to one d-dimensional vector. Two backends ship here:

* ``HashBackend`` — deterministic, dependency-free test backend built on
  feature hashing plus a seeded random projection (see ``hash_embed``).
* ``OnnxBackend`` — runs an exported transformer encoder directory
  (``model.onnx`` + tokenizer artifacts) produced by the model-export tool.

Embedding caches are binary files: a one-line JSON header followed by
length-prefixed ids and little-endian float32 payloads.
"""

from __future__ import annotations

import hashlib
import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np

from .errors import CacheError, EmbeddingError, ValidationError
from .textify import Sentence

logger = logging.getLogger(__name__)

HASH_BUCKETS = 1 << 16

POOL_MEAN = "mean"
POOL_CLS = "cls"
POOL_SUM = "sum"


def default_pooling(model_id: str) -> str:
    """Pooling strategy a model id implies when the config does not say.

    Transformer encoders mean-pool their token embeddings. The hash
    backend sum-pools: its signed bags carry sentence-length information
    that the detector needs, and mean pooling (or normalizing) divides
    that signal away.
    """
    if model_id == "hash" or model_id.startswith("hash-"):
        return POOL_SUM
    return POOL_MEAN


@dataclass(frozen=True)
class EmbedderConfig:
    model_id: str
    dim: int
    pooling: str = POOL_MEAN
    max_tokens: int = 256
    normalize: bool = False  # L2-normalize the pooled output

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValidationError("dim must be >= 1")
        if self.pooling not in (POOL_MEAN, POOL_CLS, POOL_SUM):
            raise ValidationError(f"unknown pooling {self.pooling!r}")
        if self.max_tokens < 2:
            raise ValidationError("max_tokens must be >= 2")


@dataclass(frozen=True)
class EmbeddingVector:
    process_id: str
    values: np.ndarray
    model_id: str

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.ndim != 1:
            raise ValidationError("embedding values must be a 1-D vector")
        if not np.all(np.isfinite(values)):
            raise ValidationError(
                f"non-finite embedding for process {self.process_id!r}"
            )
        values.setflags(write=False)


class EmbedderBackend(Protocol):
    """Sentence -> token vectors. Implementations are immutable after load."""

    model_id: str
    dim: int
    normalizes_output: bool

    def token_vectors(self, text: str, max_tokens: int) -> np.ndarray:
        """Return a T x dim matrix of token vectors, head-truncated to
        max_tokens."""
        ...


def pool(token_vectors: np.ndarray, strategy: str) -> np.ndarray:
    """Collapse T x d token vectors to a single d-vector."""
    token_vectors = np.asarray(token_vectors, dtype=np.float64)
    if token_vectors.ndim != 2 or token_vectors.shape[0] < 1:
        raise ValueError(
            f"pool expects a non-empty T x d matrix, got shape {token_vectors.shape}"
        )
    if strategy == POOL_MEAN:
        return token_vectors.mean(axis=0)
    if strategy == POOL_CLS:
        return token_vectors[0].copy()
    if strategy == POOL_SUM:
        return token_vectors.sum(axis=0)
    raise ValueError(f"unknown pooling strategy {strategy!r}")


def embed(
    sentence: Sentence, cfg: EmbedderConfig, backend: EmbedderBackend
) -> EmbeddingVector:
    """Embed one sentence: tokenize via the backend, head-truncate, pool."""
    if backend.dim != cfg.dim:
        raise EmbeddingError(
            f"backend dim {backend.dim} does not match config dim {cfg.dim}"
        )
    try:
        tokens = backend.token_vectors(sentence.text, cfg.max_tokens)
    except EmbeddingError:
        raise
    except Exception as e:  # backend internals (missing file, bad artifact)
        raise EmbeddingError(f"backend {backend.model_id!r} failed: {e}") from e
    if tokens.shape[0] > cfg.max_tokens:
        raise EmbeddingError(
            f"backend returned {tokens.shape[0]} token vectors, "
            f"max_tokens is {cfg.max_tokens}"
        )
    vector = pool(tokens, cfg.pooling)
    if backend.normalizes_output or cfg.normalize:
        norm = float(np.linalg.norm(vector))
        if norm > 0.0:
            vector = vector / norm
    return EmbeddingVector(sentence.process_id, vector, cfg.model_id)


def embed_all(
    sentences: Iterable[Sentence], cfg: EmbedderConfig, backend: EmbedderBackend
) -> list[EmbeddingVector]:
    return [embed(s, cfg, backend) for s in sentences]


# --- Hash backend ----------------------------------------------------------


def _token_bucket_sign(token: str) -> tuple[int, int]:
    """Stable token hash: blake2b-64 of the UTF-8 bytes.

    Low 16 bits pick the bucket; bit 16 picks the sign. Independent of
    PYTHONHASHSEED and the platform.
    """
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    value = int.from_bytes(digest, "big")
    bucket = value % HASH_BUCKETS
    sign = 1 if (value >> 16) & 1 == 0 else -1
    return bucket, sign


def _projection_row(seed: int, bucket: int, dim: int) -> np.ndarray:
    """Row ``bucket`` of the virtual HASH_BUCKETS x dim projection matrix.

    Entries are standard normals from PCG64 seeded with
    SeedSequence([seed, bucket]), so any row can be regenerated without
    materializing the full matrix.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, bucket]))
    return rng.standard_normal(dim)


class HashBackend:
    """Deterministic feature-hashing backend; no model files required.

    Does not normalize: sum pooling over its token vectors yields the raw
    signed bag, whose magnitude grows with sentence length. ``hash_embed``
    is the normalized variant of the same bag.
    """

    normalizes_output = False

    def __init__(self, dim: int, seed: int = 0, model_id: str | None = None):
        if dim < 1:
            raise ValidationError("dim must be >= 1")
        self.dim = dim
        self.seed = seed
        self.model_id = model_id if model_id is not None else f"hash-{dim}-s{seed}"
        self._rows: dict[int, np.ndarray] = {}

    def _row(self, bucket: int) -> np.ndarray:
        row = self._rows.get(bucket)
        if row is None:
            row = _projection_row(self.seed, bucket, self.dim)
            row.setflags(write=False)
            self._rows[bucket] = row
        return row

    def token_vectors(self, text: str, max_tokens: int) -> np.ndarray:
        tokens = text.split()
        if not tokens:
            raise EmbeddingError("cannot embed an all-whitespace sentence")
        if len(tokens) > max_tokens:
            logger.debug(
                "head-truncating sentence %r... from %d to %d tokens",
                text[:32], len(tokens), max_tokens,
            )
            tokens = tokens[:max_tokens]
        out = np.empty((len(tokens), self.dim))
        for i, token in enumerate(tokens):
            bucket, sign = _token_bucket_sign(token)
            out[i] = sign * self._row(bucket)
        return out


def hash_embed(sentence: Sentence, dim: int, seed: int = 0) -> EmbeddingVector:
    """Reference feature-hashing embedding.

    Whitespace tokens go into a signed bag over 2**16 buckets (hash and sign
    per ``_token_bucket_sign``); the bag is multiplied by the seeded random
    projection (rows per ``_projection_row``, visited in ascending bucket
    order) and the result is L2-normalized. Zero bags come back as zero
    vectors.
    """
    if dim < 1:
        raise ValidationError("dim must be >= 1")
    bag: dict[int, int] = {}
    for token in sentence.text.split():
        bucket, sign = _token_bucket_sign(token)
        bag[bucket] = bag.get(bucket, 0) + sign
    vector = np.zeros(dim)
    for bucket in sorted(bag):
        count = bag[bucket]
        if count:
            vector += count * _projection_row(seed, bucket, dim)
    norm = float(np.linalg.norm(vector))
    if norm > 0.0:
        vector /= norm
    return EmbeddingVector(sentence.process_id, vector, f"hash-{dim}-s{seed}")


# --- Embedding cache -------------------------------------------------------


@dataclass(frozen=True)
class EmbeddingCache:
    path: Path
    model_id: str
    dim: int
    count: int


def cache_store(
    cache_path: str | Path, vectors: Sequence[EmbeddingVector]
) -> EmbeddingCache:
    """Write vectors to the binary cache format (values stored as float32)."""
    if not vectors:
        raise ValidationError("refusing to store an empty cache")
    model_id = vectors[0].model_id
    dim = vectors[0].values.shape[0]
    for v in vectors:
        if v.model_id != model_id:
            raise ValidationError(
                f"mixed model ids in cache: {v.model_id!r} vs {model_id!r}"
            )
        if v.values.shape[0] != dim:
            raise ValidationError(
                f"mixed dims in cache: {v.values.shape[0]} vs {dim}"
            )
    cache_path = Path(cache_path)
    header = json.dumps(
        {"model_id": model_id, "dim": dim, "count": len(vectors)},
        sort_keys=True,
    )
    with cache_path.open("wb") as fh:
        fh.write(header.encode("utf-8") + b"\n")
        for v in vectors:
            id_bytes = v.process_id.encode("utf-8")
            if len(id_bytes) > 0xFFFF:
                raise ValidationError(f"process id too long: {v.process_id[:32]}...")
            fh.write(struct.pack(">H", len(id_bytes)))
            fh.write(id_bytes)
            fh.write(v.values.astype("<f4").tobytes())
    return EmbeddingCache(cache_path, model_id, dim, len(vectors))


def cache_header(cache_path: str | Path) -> EmbeddingCache:
    """Read just the header line of a cache file."""
    cache_path = Path(cache_path)
    with cache_path.open("rb") as fh:
        line = fh.readline()
    try:
        meta = json.loads(line.decode("utf-8"))
        return EmbeddingCache(
            cache_path, str(meta["model_id"]), int(meta["dim"]), int(meta["count"])
        )
    except (ValueError, KeyError) as e:
        raise CacheError(f"{cache_path}: bad cache header: {e}") from e


def cache_load(cache_path: str | Path) -> list[EmbeddingVector]:
    """Read a cache back; float32 payloads round-trip exactly."""
    cache_path = Path(cache_path)
    info = cache_header(cache_path)
    vectors: list[EmbeddingVector] = []
    record_floats = info.dim * 4
    with cache_path.open("rb") as fh:
        fh.readline()  # header
        for i in range(info.count):
            len_bytes = fh.read(2)
            if len(len_bytes) != 2:
                raise CacheError(
                    f"{cache_path}: truncated at record {i} (of {info.count})"
                )
            (id_len,) = struct.unpack(">H", len_bytes)
            id_bytes = fh.read(id_len)
            payload = fh.read(record_floats)
            if len(id_bytes) != id_len or len(payload) != record_floats:
                raise CacheError(
                    f"{cache_path}: truncated at record {i} (of {info.count})"
                )
            values = np.frombuffer(payload, dtype="<f4").astype(np.float64)
            vectors.append(
                EmbeddingVector(id_bytes.decode("utf-8"), values, info.model_id)
            )
        if fh.read(1):
            raise CacheError(f"{cache_path}: trailing bytes after {info.count} records")
    return vectors


def make_backend(
    model_id: str,
    dim: int,
    *,
    seed: int = 0,
    backend_dir: str | Path | None = None,
) -> EmbedderBackend:
    """Backend factory: 'hash' (or 'hash-*') ids map to HashBackend, anything
    else is treated as an exported transformer directory."""
    if model_id == "hash" or model_id.startswith("hash-"):
        return HashBackend(dim, seed=seed, model_id=model_id if model_id != "hash" else None)
    if backend_dir is None:
        raise EmbeddingError(
            f"model {model_id!r} needs a backend_dir with exported artifacts"
        )
    from .onnx_backend import OnnxBackend

    return OnnxBackend(backend_dir, expected_dim=dim, model_id=model_id)
