"""Autoencoder variants over embedding vectors: plain (AE), variational
(VAE), and denoising (DAE), with an optional self-attention block after
the first encoder layer.

The latent width k must stay below the input width d. Training is
full-batch-shuffled mini-batch Adam; with a fixed seed and config two
runs produce bitwise-identical parameters and loss curves. The seed is
split into four independent child streams (init, shuffle, noise, eps),
so a DAE at sigma = 0 consumes its noise stream without perturbing the
arithmetic and matches a plain AE exactly.

Reconstruction loss is the mean squared difference over coordinates,
averaged over the batch. VAE KL is the closed-form sum over latent
coordinates (not normalized by k); validation for a VAE is computed at
z = mu with the beta-weighted KL added, and a DAE validates on clean
inputs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .embedder import EmbeddingVector
from .errors import TrainingError, ValidationError
from .neural import (
    IDENTITY,
    TANH,
    AdamState,
    DenseLayer,
    MultiHeadAttention,
    adam_step,
    attention_backward,
    attention_forward,
    dense_backward,
    dense_forward,
    init_attention,
    init_dense,
    load_checkpoint,
    save_checkpoint,
)

logger = logging.getLogger(__name__)

VARIANT_AE = "ae"
VARIANT_VAE = "vae"
VARIANT_DAE = "dae"
VARIANTS = (VARIANT_AE, VARIANT_VAE, VARIANT_DAE)

NOISE_GAUSSIAN = "gaussian"
NOISE_MASK = "mask"

ATTENTION_CHUNKS = 8


def ae_loss(x: np.ndarray, x_hat: np.ndarray) -> float:
    """Mean squared difference over coordinates."""
    x = np.asarray(x, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x.shape != x_hat.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {x_hat.shape}")
    d = x - x_hat
    return float(np.mean(d * d))


def reparameterize(
    mu: np.ndarray, logvar: np.ndarray, eps: np.ndarray
) -> np.ndarray:
    """z = mu + exp(logvar / 2) * eps, elementwise."""
    return mu + np.exp(np.asarray(logvar, dtype=np.float64) / 2.0) * eps


def kl_divergence(mu: np.ndarray, logvar: np.ndarray) -> float:
    """Closed-form KL against the unit gaussian, summed over coordinates:

    -0.5 * sum_j(1 + logvar_j - mu_j^2 - exp(logvar_j))
    """
    mu = np.asarray(mu, dtype=np.float64)
    logvar = np.asarray(logvar, dtype=np.float64)
    return float(-0.5 * np.sum(1.0 + logvar - mu * mu - np.exp(logvar)))


def vae_loss(
    x: np.ndarray,
    x_hat: np.ndarray,
    mu: np.ndarray,
    logvar: np.ndarray,
    beta: float = 1.0,
) -> float:
    return ae_loss(x, x_hat) + beta * kl_divergence(mu, logvar)


class _AttentionBlock:
    """Reshapes a hidden vector into ATTENTION_CHUNKS rows and applies
    multi-head self-attention, then flattens back."""

    def __init__(self, att: MultiHeadAttention, hidden_dim: int) -> None:
        if hidden_dim != ATTENTION_CHUNKS * att.d_model:
            raise ValidationError(
                f"attention d_model {att.d_model} does not tile hidden "
                f"width {hidden_dim} into {ATTENTION_CHUNKS} chunks"
            )
        self.att = att
        self.hidden_dim = hidden_dim

    def forward(self, H: np.ndarray) -> tuple[np.ndarray, dict]:
        shape = H.shape
        seq = H.reshape(*shape[:-1], ATTENTION_CHUNKS, self.att.d_model)
        out, cache = attention_forward(self.att, seq)
        return out.reshape(shape), cache

    def backward(self, cache: dict, upstream: np.ndarray):
        shape = upstream.shape
        up_seq = upstream.reshape(
            *shape[:-1], ATTENTION_CHUNKS, self.att.d_model
        )
        grads, dX = attention_backward(self.att, cache, up_seq)
        return grads, dX.reshape(shape)


def _layer_params(prefix: str, layer: DenseLayer, out: dict) -> None:
    out[f"{prefix}.W"] = layer.W
    out[f"{prefix}.b"] = layer.b


class AeModel:
    """Plain autoencoder: encoder stack to a k-wide code, mirrored decoder.

    Args:
        input_dim: embedding width d.
        hidden: encoder hidden widths, mirrored by the decoder.
        latent_dim: code width k, must satisfy k < d.
        attention: insert a self-attention block after the first encoder
            layer. Requires the first hidden width to split into
            ATTENTION_CHUNKS equal chunks; otherwise the block is dropped
            with a warning.
    """

    variant = VARIANT_AE

    def __init__(
        self,
        input_dim: int,
        hidden: Sequence[int] = (128,),
        latent_dim: int = 32,
        *,
        attention: bool = False,
        attention_heads: int = 2,
    ) -> None:
        if latent_dim >= input_dim:
            raise ValidationError(
                f"latent width {latent_dim} must be below input width {input_dim}"
            )
        if not hidden:
            raise ValidationError("need at least one hidden width")
        self.input_dim = int(input_dim)
        self.hidden = tuple(int(h) for h in hidden)
        self.latent_dim = int(latent_dim)
        self.attention_heads = int(attention_heads)
        self.use_attention = bool(attention)
        if self.use_attention and self.hidden[0] % ATTENTION_CHUNKS != 0:
            logger.warning(
                "attention disabled: hidden width %d not divisible by %d",
                self.hidden[0],
                ATTENTION_CHUNKS,
            )
            self.use_attention = False
        self.encoder: list[DenseLayer] = []
        self.decoder: list[DenseLayer] = []
        self.attention_block: _AttentionBlock | None = None
        self.reinit(np.random.default_rng(0))

    def _att_spec(self) -> tuple[int, int, int]:
        d_model = self.hidden[0] // ATTENTION_CHUNKS
        d_k = max(1, d_model // self.attention_heads)
        return d_model, self.attention_heads, d_k

    def reinit(self, rng: np.random.Generator) -> None:
        """Redraw every parameter from ``rng`` (training entry point)."""
        enc_dims = (self.input_dim, *self.hidden, self.latent_dim)
        dec_dims = (self.latent_dim, *reversed(self.hidden), self.input_dim)
        self.encoder = [
            init_dense(enc_dims[i], enc_dims[i + 1], TANH, rng)
            for i in range(len(enc_dims) - 1)
        ]
        self.decoder = [
            init_dense(
                dec_dims[i],
                dec_dims[i + 1],
                TANH if i < len(dec_dims) - 2 else IDENTITY,
                rng,
            )
            for i in range(len(dec_dims) - 1)
        ]
        if self.use_attention:
            d_model, heads, d_k = self._att_spec()
            self.attention_block = _AttentionBlock(
                init_attention(d_model, heads, d_k, rng), self.hidden[0]
            )

    def param_dict(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for i, layer in enumerate(self.encoder):
            _layer_params(f"enc{i}", layer, out)
        if self.attention_block is not None:
            att = self.attention_block.att
            out["att.w_q"] = att.w_q
            out["att.w_k"] = att.w_k
            out["att.w_v"] = att.w_v
            out["att.w_o"] = att.w_o
        for i, layer in enumerate(self.decoder):
            _layer_params(f"dec{i}", layer, out)
        return out

    def encode(self, X: np.ndarray) -> np.ndarray:
        H = np.asarray(X, dtype=np.float64)
        for i, layer in enumerate(self.encoder):
            H = dense_forward(layer, H)
            if i == 0 and self.attention_block is not None:
                H, _ = self.attention_block.forward(H)
        return H

    def reconstruct(self, X: np.ndarray) -> np.ndarray:
        H = self.encode(X)
        for layer in self.decoder:
            H = dense_forward(layer, H)
        return H

    def loss(self, X: np.ndarray, target: np.ndarray | None = None) -> float:
        target = np.asarray(X if target is None else target, dtype=np.float64)
        return ae_loss(target, self.reconstruct(X))

    def loss_and_grads(
        self, X: np.ndarray, target: np.ndarray | None = None
    ) -> tuple[float, dict[str, np.ndarray]]:
        """Batch loss and analytic parameter gradients.

        ``target`` defaults to the input; a denoising wrapper passes the
        corrupted batch as X and the clean batch as target.
        """
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        tgt = X if target is None else np.atleast_2d(
            np.asarray(target, dtype=np.float64)
        )
        acts = [X]
        att_cache = None
        H = X
        for i, layer in enumerate(self.encoder):
            H = dense_forward(layer, H)
            if i == 0 and self.attention_block is not None:
                acts.append(H)
                H, att_cache = self.attention_block.forward(H)
            acts.append(H)
        for layer in self.decoder:
            H = dense_forward(layer, H)
            acts.append(H)
        x_hat = acts.pop()
        diff = x_hat - tgt
        loss = float(np.mean(diff * diff))
        grads: dict[str, np.ndarray] = {}
        up = 2.0 * diff / diff.size
        for i in range(len(self.decoder) - 1, -1, -1):
            (dW, db), up = dense_backward(self.decoder[i], acts.pop(), up)
            grads[f"dec{i}.W"] = dW
            grads[f"dec{i}.b"] = db
        for i in range(len(self.encoder) - 1, -1, -1):
            x_in = acts.pop()
            if i == 0 and self.attention_block is not None:
                # popped value is the attention output's pre-image; the
                # block cache already holds it, so swap in the true input
                a_grads, up = self.attention_block.backward(att_cache, up)
                grads["att.w_q"] = a_grads.w_q
                grads["att.w_k"] = a_grads.w_k
                grads["att.w_v"] = a_grads.w_v
                grads["att.w_o"] = a_grads.w_o
                x_in = acts.pop()
            (dW, db), up = dense_backward(self.encoder[i], x_in, up)
            grads[f"enc{i}.W"] = dW
            grads[f"enc{i}.b"] = db
        return loss, grads

    def val_loss(self, X: np.ndarray) -> float:
        return self.loss(X)

    def meta(self) -> dict[str, object]:
        return {
            "variant": self.variant,
            "input_dim": self.input_dim,
            "hidden": list(self.hidden),
            "latent_dim": self.latent_dim,
            "attention": self.use_attention,
            "attention_heads": self.attention_heads,
        }


class VaeModel:
    """Variational autoencoder sharing the AE trunk, with identity-activated
    mu and logvar heads and a beta-weighted KL term."""

    variant = VARIANT_VAE

    def __init__(
        self,
        input_dim: int,
        hidden: Sequence[int] = (128,),
        latent_dim: int = 32,
        *,
        beta: float = 1.0,
        attention: bool = False,
        attention_heads: int = 2,
    ) -> None:
        if latent_dim >= input_dim:
            raise ValidationError(
                f"latent width {latent_dim} must be below input width {input_dim}"
            )
        if not hidden:
            raise ValidationError("need at least one hidden width")
        if beta < 0.0:
            raise ValidationError(f"beta must be >= 0, got {beta}")
        self.input_dim = int(input_dim)
        self.hidden = tuple(int(h) for h in hidden)
        self.latent_dim = int(latent_dim)
        self.beta = float(beta)
        self.attention_heads = int(attention_heads)
        self.use_attention = bool(attention)
        if self.use_attention and self.hidden[0] % ATTENTION_CHUNKS != 0:
            logger.warning(
                "attention disabled: hidden width %d not divisible by %d",
                self.hidden[0],
                ATTENTION_CHUNKS,
            )
            self.use_attention = False
        self.trunk: list[DenseLayer] = []
        self.mu_head: DenseLayer | None = None
        self.logvar_head: DenseLayer | None = None
        self.decoder: list[DenseLayer] = []
        self.attention_block: _AttentionBlock | None = None
        self.reinit(np.random.default_rng(0))

    def reinit(self, rng: np.random.Generator) -> None:
        dims = (self.input_dim, *self.hidden)
        self.trunk = [
            init_dense(dims[i], dims[i + 1], TANH, rng)
            for i in range(len(dims) - 1)
        ]
        self.mu_head = init_dense(self.hidden[-1], self.latent_dim, IDENTITY, rng)
        self.logvar_head = init_dense(
            self.hidden[-1], self.latent_dim, IDENTITY, rng
        )
        dec_dims = (self.latent_dim, *reversed(self.hidden), self.input_dim)
        self.decoder = [
            init_dense(
                dec_dims[i],
                dec_dims[i + 1],
                TANH if i < len(dec_dims) - 2 else IDENTITY,
                rng,
            )
            for i in range(len(dec_dims) - 1)
        ]
        if self.use_attention:
            d_model = self.hidden[0] // ATTENTION_CHUNKS
            d_k = max(1, d_model // self.attention_heads)
            self.attention_block = _AttentionBlock(
                init_attention(d_model, self.attention_heads, d_k, rng),
                self.hidden[0],
            )

    def param_dict(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for i, layer in enumerate(self.trunk):
            _layer_params(f"trunk{i}", layer, out)
        if self.attention_block is not None:
            att = self.attention_block.att
            out["att.w_q"] = att.w_q
            out["att.w_k"] = att.w_k
            out["att.w_v"] = att.w_v
            out["att.w_o"] = att.w_o
        _layer_params("mu", self.mu_head, out)
        _layer_params("logvar", self.logvar_head, out)
        for i, layer in enumerate(self.decoder):
            _layer_params(f"dec{i}", layer, out)
        return out

    def _trunk_forward(self, X: np.ndarray) -> np.ndarray:
        H = np.asarray(X, dtype=np.float64)
        for i, layer in enumerate(self.trunk):
            H = dense_forward(layer, H)
            if i == 0 and self.attention_block is not None:
                H, _ = self.attention_block.forward(H)
        return H

    def encode(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Returns (mu, logvar)."""
        H = self._trunk_forward(X)
        return dense_forward(self.mu_head, H), dense_forward(self.logvar_head, H)

    def decode(self, Z: np.ndarray) -> np.ndarray:
        H = np.asarray(Z, dtype=np.float64)
        for layer in self.decoder:
            H = dense_forward(layer, H)
        return H

    def reconstruct(self, X: np.ndarray) -> np.ndarray:
        """Deterministic reconstruction through z = mu (scoring path)."""
        mu, _ = self.encode(X)
        return self.decode(mu)

    def loss(self, X: np.ndarray, eps: np.ndarray | None = None) -> float:
        """Batch-mean VAE objective; eps=None scores at z = mu."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        mu, logvar = self.encode(X)
        z = mu if eps is None else reparameterize(mu, logvar, eps)
        x_hat = self.decode(z)
        kl = -0.5 * np.sum(
            1.0 + logvar - mu * mu - np.exp(logvar), axis=-1
        )
        return ae_loss(X, x_hat) + self.beta * float(np.mean(kl))

    def loss_and_grads(
        self, X: np.ndarray, eps: np.ndarray
    ) -> tuple[float, dict[str, np.ndarray]]:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        eps = np.atleast_2d(np.asarray(eps, dtype=np.float64))
        n = X.shape[0]

        trunk_acts = [X]
        att_cache = None
        H = X
        for i, layer in enumerate(self.trunk):
            H = dense_forward(layer, H)
            if i == 0 and self.attention_block is not None:
                trunk_acts.append(H)
                H, att_cache = self.attention_block.forward(H)
            trunk_acts.append(H)
        mu = dense_forward(self.mu_head, H)
        logvar = dense_forward(self.logvar_head, H)
        std = np.exp(logvar / 2.0)
        z = mu + std * eps

        dec_acts = [z]
        D = z
        for layer in self.decoder:
            D = dense_forward(layer, D)
            dec_acts.append(D)
        x_hat = dec_acts.pop()

        diff = x_hat - X
        recon = float(np.mean(diff * diff))
        kl_rows = -0.5 * np.sum(1.0 + logvar - mu * mu - np.exp(logvar), axis=-1)
        loss = recon + self.beta * float(np.mean(kl_rows))

        grads: dict[str, np.ndarray] = {}
        up = 2.0 * diff / diff.size
        for i in range(len(self.decoder) - 1, -1, -1):
            (dW, db), up = dense_backward(self.decoder[i], dec_acts.pop(), up)
            grads[f"dec{i}.W"] = dW
            grads[f"dec{i}.b"] = db
        dz = up
        # KL contribution, averaged over the batch like the loss
        d_mu = dz + (self.beta / n) * mu
        d_logvar = dz * eps * 0.5 * std + (self.beta / n) * 0.5 * (
            np.exp(logvar) - 1.0
        )
        H_top = trunk_acts[-1]
        (dW, db), up_mu = dense_backward(self.mu_head, H_top, d_mu)
        grads["mu.W"] = dW
        grads["mu.b"] = db
        (dW, db), up_lv = dense_backward(self.logvar_head, H_top, d_logvar)
        grads["logvar.W"] = dW
        grads["logvar.b"] = db
        up = up_mu + up_lv
        trunk_acts.pop()
        for i in range(len(self.trunk) - 1, -1, -1):
            x_in = trunk_acts.pop()
            if i == 0 and self.attention_block is not None:
                a_grads, up = self.attention_block.backward(att_cache, up)
                grads["att.w_q"] = a_grads.w_q
                grads["att.w_k"] = a_grads.w_k
                grads["att.w_v"] = a_grads.w_v
                grads["att.w_o"] = a_grads.w_o
                x_in = trunk_acts.pop()
            (dW, db), up = dense_backward(self.trunk[i], x_in, up)
            grads[f"trunk{i}.W"] = dW
            grads[f"trunk{i}.b"] = db
        return loss, grads

    def val_loss(self, X: np.ndarray) -> float:
        """Deterministic validation objective at z = mu, KL included."""
        return self.loss(X, eps=None)

    def meta(self) -> dict[str, object]:
        return {
            "variant": self.variant,
            "input_dim": self.input_dim,
            "hidden": list(self.hidden),
            "latent_dim": self.latent_dim,
            "beta": self.beta,
            "attention": self.use_attention,
            "attention_heads": self.attention_heads,
        }


class DaeModel:
    """Denoising autoencoder: an AeModel trained on corrupted inputs
    against clean targets. Exactly one noise mode is active."""

    variant = VARIANT_DAE

    def __init__(
        self,
        input_dim: int,
        hidden: Sequence[int] = (128,),
        latent_dim: int = 32,
        *,
        noise_mode: str = NOISE_GAUSSIAN,
        noise_sigma: float = 0.1,
        mask_fraction: float = 0.1,
        attention: bool = False,
        attention_heads: int = 2,
    ) -> None:
        if noise_mode not in (NOISE_GAUSSIAN, NOISE_MASK):
            raise ValidationError(f"unknown noise mode {noise_mode!r}")
        if noise_sigma < 0.0:
            raise ValidationError(f"noise sigma must be >= 0, got {noise_sigma}")
        if not 0.0 <= mask_fraction <= 1.0:
            raise ValidationError(
                f"mask fraction must be in [0, 1], got {mask_fraction}"
            )
        self.noise_mode = noise_mode
        self.noise_sigma = float(noise_sigma)
        self.mask_fraction = float(mask_fraction)
        self.inner = AeModel(
            input_dim,
            hidden,
            latent_dim,
            attention=attention,
            attention_heads=attention_heads,
        )

    @property
    def input_dim(self) -> int:
        return self.inner.input_dim

    @property
    def latent_dim(self) -> int:
        return self.inner.latent_dim

    def reinit(self, rng: np.random.Generator) -> None:
        self.inner.reinit(rng)

    def param_dict(self) -> dict[str, np.ndarray]:
        return self.inner.param_dict()

    def reconstruct(self, X: np.ndarray) -> np.ndarray:
        return self.inner.reconstruct(X)

    def loss(self, X_noisy: np.ndarray, target: np.ndarray) -> float:
        return self.inner.loss(X_noisy, target)

    def loss_and_grads(
        self, X_noisy: np.ndarray, target: np.ndarray
    ) -> tuple[float, dict[str, np.ndarray]]:
        return self.inner.loss_and_grads(X_noisy, target)

    def val_loss(self, X: np.ndarray) -> float:
        """Validation runs on clean inputs (no corruption)."""
        return self.inner.loss(X)

    def meta(self) -> dict[str, object]:
        out = self.inner.meta()
        out.update(
            {
                "variant": self.variant,
                "noise_mode": self.noise_mode,
                "noise_sigma": self.noise_sigma,
                "mask_fraction": self.mask_fraction,
            }
        )
        return out


def add_noise(
    x: np.ndarray, model: DaeModel, rng: np.random.Generator
) -> np.ndarray:
    """Corrupt ``x`` per the model's noise mode.

    gaussian: x + sigma * standard normal draw per coordinate.
    mask: each coordinate independently zeroed with probability
    mask_fraction.
    """
    x = np.asarray(x, dtype=np.float64)
    if model.noise_mode == NOISE_GAUSSIAN:
        return x + model.noise_sigma * rng.standard_normal(x.shape)
    keep = rng.random(x.shape) >= model.mask_fraction
    return x * keep


AnyModel = AeModel | VaeModel | DaeModel


def build_model(
    variant: str,
    input_dim: int,
    *,
    hidden: Sequence[int] = (128,),
    latent_dim: int = 32,
    beta: float = 1.0,
    noise_mode: str = NOISE_GAUSSIAN,
    noise_sigma: float = 0.1,
    mask_fraction: float = 0.1,
    attention: bool = False,
    attention_heads: int = 2,
) -> AnyModel:
    """Construct one of the three variants from a flat option set."""
    if variant == VARIANT_AE:
        return AeModel(
            input_dim,
            hidden,
            latent_dim,
            attention=attention,
            attention_heads=attention_heads,
        )
    if variant == VARIANT_VAE:
        return VaeModel(
            input_dim,
            hidden,
            latent_dim,
            beta=beta,
            attention=attention,
            attention_heads=attention_heads,
        )
    if variant == VARIANT_DAE:
        return DaeModel(
            input_dim,
            hidden,
            latent_dim,
            noise_mode=noise_mode,
            noise_sigma=noise_sigma,
            mask_fraction=mask_fraction,
            attention=attention,
            attention_heads=attention_heads,
        )
    raise ValidationError(f"unknown variant {variant!r}")


@dataclass(frozen=True)
class TrainConfig:
    """Knobs for one training run; defaults match the scoring pipeline."""

    epochs: int = 100
    batch_size: int = 64
    learning_rate: float = 1e-3
    val_fraction: float = 0.2
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValidationError(
                f"batch size must be >= 1, got {self.batch_size}"
            )
        if not 0.0 < self.val_fraction < 1.0:
            raise ValidationError(
                f"val fraction must be in (0, 1), got {self.val_fraction}"
            )
        if self.learning_rate <= 0.0:
            raise ValidationError(
                f"learning rate must be > 0, got {self.learning_rate}"
            )


@dataclass
class TrainReport:
    """Loss curves plus the trained model and the config that produced it."""

    model: AnyModel
    config: TrainConfig
    train_losses: list[float] = field(default_factory=list)
    val_losses: list[float] = field(default_factory=list)

    def to_csv(self, path: str | Path) -> None:
        lines = ["epoch,train_loss,val_loss"]
        for e, (tr, va) in enumerate(
            zip(self.train_losses, self.val_losses), start=1
        ):
            lines.append(f"{e},{tr!r},{va!r}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _as_matrix(
    vectors: Sequence[EmbeddingVector] | np.ndarray,
) -> np.ndarray:
    if isinstance(vectors, np.ndarray):
        X = np.asarray(vectors, dtype=np.float64)
        if X.ndim != 2:
            raise ValidationError(f"training matrix must be 2-D, got {X.ndim}-D")
        return X
    if len(vectors) == 0:
        raise ValidationError("training input is empty")
    return np.stack([v.values for v in vectors]).astype(np.float64)


def train(
    model: AnyModel,
    vectors: Sequence[EmbeddingVector] | np.ndarray,
    cfg: TrainConfig,
    *,
    labels: Mapping[str, str] | None = None,
    contamination_tolerance: float = 0.0,
) -> TrainReport:
    """Mini-batch Adam over the reconstruction objective.

    The input is expected to be normal-only. When ``labels`` is supplied
    (process id -> "normal" | "attack") the attack fraction must not
    exceed ``contamination_tolerance``.

    The config seed spawns four child streams: parameter init, shuffling
    (validation split and per-epoch order), corruption noise, and VAE
    eps draws. Same model spec + vectors + config gives bitwise-equal
    parameters and curves.
    """
    X = _as_matrix(vectors)
    n = X.shape[0]
    if X.shape[1] != model.input_dim:
        raise ValidationError(
            f"vector width {X.shape[1]} != model input width {model.input_dim}"
        )
    if labels is not None and not isinstance(vectors, np.ndarray):
        bad = sum(1 for v in vectors if labels.get(v.process_id) == "attack")
        if bad > contamination_tolerance * n:
            raise ValidationError(
                f"{bad} of {n} training vectors are attack-labeled "
                f"(tolerance {contamination_tolerance})"
            )

    base = np.random.SeedSequence(cfg.seed)
    init_ss, shuffle_ss, noise_ss, eps_ss = base.spawn(4)
    init_rng = np.random.default_rng(init_ss)
    shuffle_rng = np.random.default_rng(shuffle_ss)
    noise_rng = np.random.default_rng(noise_ss)
    eps_rng = np.random.default_rng(eps_ss)

    model.reinit(init_rng)

    if n >= 2:
        n_val = min(n - 1, max(1, int(round(n * cfg.val_fraction))))
        perm = shuffle_rng.permutation(n)
        val_idx = perm[:n_val]
        train_idx = perm[n_val:]
    else:
        # degenerate single-row input: validate on the same row
        val_idx = np.array([0])
        train_idx = np.array([0])
    X_train = X[train_idx]
    X_val = X[val_idx]
    n_train = X_train.shape[0]

    adam = AdamState(lr=cfg.learning_rate)
    params = model.param_dict()
    report = TrainReport(model=model, config=cfg)
    is_vae = isinstance(model, VaeModel)
    is_dae = isinstance(model, DaeModel)

    for epoch in range(1, cfg.epochs + 1):
        order = (
            shuffle_rng.permutation(n_train)
            if cfg.shuffle
            else np.arange(n_train)
        )
        total = 0.0
        for start in range(0, n_train, cfg.batch_size):
            batch = X_train[order[start : start + cfg.batch_size]]
            if is_vae:
                eps = eps_rng.standard_normal(
                    (batch.shape[0], model.latent_dim)
                )
                loss, grads = model.loss_and_grads(batch, eps)
            elif is_dae:
                noisy = add_noise(batch, model, noise_rng)
                loss, grads = model.loss_and_grads(noisy, batch)
            else:
                loss, grads = model.loss_and_grads(batch)
            if not np.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch offset {start}"
                )
            adam_step(adam, params, grads)
            total += loss * batch.shape[0]
        report.train_losses.append(total / n_train)
        report.val_losses.append(model.val_loss(X_val))
    return report


# --- Checkpoints -------------------------------------------------------------


def save_model(path: str | Path, model: AnyModel, *, seed: int | None = None) -> None:
    meta = model.meta()
    if seed is not None:
        meta["seed"] = seed
    params = model.param_dict()
    save_checkpoint(path, meta, list(params.items()))


def load_model(path: str | Path) -> AnyModel:
    meta, tensors = load_checkpoint(path)
    model = build_model(
        meta["variant"],
        int(meta["input_dim"]),
        hidden=tuple(meta["hidden"]),
        latent_dim=int(meta["latent_dim"]),
        beta=float(meta.get("beta", 1.0)),
        noise_mode=meta.get("noise_mode", NOISE_GAUSSIAN),
        noise_sigma=float(meta.get("noise_sigma", 0.1)),
        mask_fraction=float(meta.get("mask_fraction", 0.1)),
        attention=bool(meta.get("attention", False)),
        attention_heads=int(meta.get("attention_heads", 2)),
    )
    params = model.param_dict()
    if set(params) != set(tensors):
        raise ValidationError(
            f"{path}: checkpoint tensors do not match the declared architecture"
        )
    for name, arr in tensors.items():
        if params[name].shape != arr.shape:
            raise ValidationError(
                f"{path}: tensor {name!r} has shape {arr.shape}, "
                f"expected {params[name].shape}"
            )
        params[name][...] = arr
    return model
