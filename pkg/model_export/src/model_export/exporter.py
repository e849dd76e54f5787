"""Export an encoder to ONNX with its tokenizer and manifest.

Two modes:

* ``pretrained`` (default): load the checkpoint named in the catalog. If
  it cannot be retrieved (no hub access, missing cache) the export fails
  with ExportError, as it should.
* ``random-init``: build the architecture at its advertised width with a
  seeded random initialization and a reduced depth. Everything downstream
  (tokenizer artifacts, graph structure, parity fixtures) is exercised
  identically; the manifest's ``source`` field records the mode so no one
  mistakes the weights for the real checkpoint.

The legacy TorchScript exporter is used; its onnxscript post-processing
step is patched out because it needs the ``onnx`` package while doing
nothing for plain encoder graphs (they contain no custom functions).
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .catalog import ModelSpec, get_spec, layout_config, model_class
from .tokenizer_build import PAD_TOKEN_ID, write_tokenizer

MODES = ("pretrained", "random-init")
VALID_DIMS = (384, 768, 1024)
DEFAULT_SEQUENCE_LENGTH = 64
DEFAULT_NUM_LAYERS = 2
OPSET = 17


class ExportError(RuntimeError):
    """Raised when a checkpoint cannot be retrieved or exported."""


@dataclass(frozen=True)
class ExportManifest:
    """What an export produced; written as manifest.json next to the model."""

    model_id: str
    source: str
    dim: int
    pooling: str
    sequence_length: int
    pad_token_id: int
    inputs: tuple[str, ...]
    num_layers: int
    seed: int | None
    versions: dict[str, str] = field(default_factory=dict)
    checksum_sha256: str = ""

    def __post_init__(self) -> None:
        if self.dim not in VALID_DIMS:
            raise ExportError(
                f"dim {self.dim} outside the supported set {VALID_DIMS}"
            )

    def write(self, out_dir: str | Path) -> Path:
        path = Path(out_dir) / "manifest.json"
        payload = asdict(self)
        payload["inputs"] = list(self.inputs)
        path.write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        return path


def read_manifest(out_dir: str | Path) -> ExportManifest:
    path = Path(out_dir) / "manifest.json"
    if not path.is_file():
        raise ExportError(f"no manifest.json under {out_dir}")
    raw = json.loads(path.read_text(encoding="utf-8"))
    raw["inputs"] = tuple(raw["inputs"])
    return ExportManifest(**raw)


def _tool_versions() -> dict[str, str]:
    import tokenizers
    import torch
    import transformers

    return {
        "torch": torch.__version__,
        "transformers": transformers.__version__,
        "tokenizers": tokenizers.__version__,
    }


def _patch_legacy_exporter() -> None:
    """Make torch's legacy ONNX exporter work without the onnx package."""
    try:
        from torch.onnx._internal.torchscript_exporter import onnx_proto_utils
    except ImportError:
        return

    def _passthrough(model_bytes, custom_opsets):
        return model_bytes

    onnx_proto_utils._add_onnxscript_fn = _passthrough


def build_torch_model(
    spec: ModelSpec,
    mode: str,
    seed: int,
    vocab_size: int,
    sequence_length: int,
    num_layers: int,
):
    """Construct the eval-mode torch encoder; returns (model, source label)."""
    import torch

    if mode == "pretrained":
        cls = model_class(spec)
        try:
            model = cls.from_pretrained(spec.source)
        except Exception as e:
            raise ExportError(
                f"checkpoint {spec.source!r} is not retrievable: {e}"
            ) from e
        return model.eval(), spec.source
    if mode == "random-init":
        torch.manual_seed(seed)
        config = layout_config(
            spec, vocab_size, sequence_length, num_layers, PAD_TOKEN_ID
        )
        model = model_class(spec)(config)
        label = f"random-init({spec.source} layout, seed={seed}, layers={num_layers})"
        return model.eval(), label
    raise ExportError(f"unknown export mode {mode!r}; expected one of {MODES}")


class _KeywordWrapper:
    """Defined lazily to keep torch an import-time optional."""

    def __new__(cls, inner, needs_token_type_ids: bool):
        import torch.nn as nn

        if needs_token_type_ids:

            class Wrapped(nn.Module):
                def __init__(self, inner_model):
                    super().__init__()
                    self.inner = inner_model

                def forward(self, input_ids, attention_mask, token_type_ids):
                    out = self.inner(
                        input_ids=input_ids,
                        attention_mask=attention_mask,
                        token_type_ids=token_type_ids,
                        return_dict=False,
                    )
                    return out[0]

        else:

            class Wrapped(nn.Module):
                def __init__(self, inner_model):
                    super().__init__()
                    self.inner = inner_model

                def forward(self, input_ids, attention_mask):
                    out = self.inner(
                        input_ids=input_ids,
                        attention_mask=attention_mask,
                        return_dict=False,
                    )
                    return out[0]

        return Wrapped(inner).eval()


def export_model(
    model_id: str,
    out_dir: str | Path,
    *,
    mode: str = "pretrained",
    seed: int = 0,
    sequence_length: int = DEFAULT_SEQUENCE_LENGTH,
    num_layers: int = DEFAULT_NUM_LAYERS,
) -> ExportManifest:
    """Write model.onnx, tokenizer.json, and manifest.json into out_dir."""
    import torch

    try:
        spec = get_spec(model_id)
    except KeyError as e:
        raise ExportError(str(e)) from e
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if mode == "pretrained":
        try:
            from transformers import AutoTokenizer

            tok = AutoTokenizer.from_pretrained(spec.source, use_fast=True)
            tok.backend_tokenizer.save(str(out_dir / "tokenizer.json"))
            pad_token_id = int(tok.pad_token_id)
            vocab = int(tok.backend_tokenizer.get_vocab_size())
        except ExportError:
            raise
        except Exception as e:
            raise ExportError(
                f"tokenizer for {spec.source!r} is not retrievable: {e}"
            ) from e
    else:
        write_tokenizer(out_dir)
        from tokenizers import Tokenizer

        built = Tokenizer.from_file(str(out_dir / "tokenizer.json"))
        pad_token_id = PAD_TOKEN_ID
        vocab = int(built.get_vocab_size())

    model, source = build_torch_model(
        spec, mode, seed, vocab, sequence_length, num_layers
    )
    wrapped = _KeywordWrapper(model, spec.needs_token_type_ids)

    ids = torch.zeros(1, sequence_length, dtype=torch.long)
    mask = torch.ones(1, sequence_length, dtype=torch.long)
    example = (ids, mask)
    if spec.needs_token_type_ids:
        example = (ids, mask, torch.zeros(1, sequence_length, dtype=torch.long))

    _patch_legacy_exporter()
    model_path = out_dir / "model.onnx"
    with torch.no_grad(), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        torch.onnx.export(
            wrapped,
            example,
            str(model_path),
            input_names=list(spec.input_names),
            output_names=["last_hidden_state"],
            do_constant_folding=True,
            opset_version=OPSET,
            dynamo=False,
        )

    checksum = hashlib.sha256(model_path.read_bytes()).hexdigest()
    manifest = ExportManifest(
        model_id=spec.model_id,
        source=source,
        dim=spec.dim,
        pooling="mean",
        sequence_length=sequence_length,
        pad_token_id=pad_token_id,
        inputs=spec.input_names,
        num_layers=num_layers,
        seed=seed if mode == "random-init" else None,
        versions=_tool_versions(),
        checksum_sha256=checksum,
    )
    manifest.write(out_dir)
    return manifest
