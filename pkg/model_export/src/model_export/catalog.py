"""The five encoder architectures this tool exports.

Each entry names the pretrained checkpoint it stands for and knows how to
build the architecture from a transformers config. ``layout_config`` takes
the hidden width from the catalog so a random-initialized build keeps the
advertised output dimension even when the depth is reduced.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ModelSpec:
    model_id: str
    source: str  # pretrained checkpoint identifier
    dim: int  # encoder output width
    family: str  # transformers architecture family
    needs_token_type_ids: bool

    @property
    def input_names(self) -> tuple[str, ...]:
        if self.needs_token_type_ids:
            return ("input_ids", "attention_mask", "token_type_ids")
        return ("input_ids", "attention_mask")


CATALOG: dict[str, ModelSpec] = {
    spec.model_id: spec
    for spec in (
        ModelSpec("bert-base", "bert-base-uncased", 768, "bert", True),
        ModelSpec("distilbert", "distilbert-base-uncased", 768, "distilbert", False),
        ModelSpec("albert-base", "albert-base-v2", 768, "albert", True),
        ModelSpec("roberta-large", "roberta-large", 1024, "roberta", False),
        ModelSpec(
            "minilm",
            "sentence-transformers/all-MiniLM-L6-v2",
            384,
            "bert",
            True,
        ),
    )
}


def get_spec(model_id: str) -> ModelSpec:
    spec = CATALOG.get(model_id)
    if spec is None:
        known = ", ".join(sorted(CATALOG))
        raise KeyError(f"unknown model id {model_id!r}; known: {known}")
    return spec


def layout_config(
    spec: ModelSpec,
    vocab_size: int,
    sequence_length: int,
    num_layers: int,
    pad_token_id: int,
):
    """A transformers config with this spec's width but a chosen depth.

    Head count and MLP width follow the family's standard ratios
    (dim / 64 heads, 4x dim feed-forward).
    """
    heads = max(1, spec.dim // 64)
    intermediate = 4 * spec.dim
    if spec.family == "bert":
        from transformers import BertConfig

        return BertConfig(
            vocab_size=vocab_size,
            hidden_size=spec.dim,
            num_hidden_layers=num_layers,
            num_attention_heads=heads,
            intermediate_size=intermediate,
            max_position_embeddings=sequence_length,
            pad_token_id=pad_token_id,
        )
    if spec.family == "distilbert":
        from transformers import DistilBertConfig

        return DistilBertConfig(
            vocab_size=vocab_size,
            dim=spec.dim,
            n_layers=num_layers,
            n_heads=heads,
            hidden_dim=intermediate,
            max_position_embeddings=sequence_length,
            pad_token_id=pad_token_id,
        )
    if spec.family == "albert":
        from transformers import AlbertConfig

        return AlbertConfig(
            vocab_size=vocab_size,
            embedding_size=128,
            hidden_size=spec.dim,
            num_hidden_layers=num_layers,
            num_attention_heads=heads,
            intermediate_size=intermediate,
            max_position_embeddings=sequence_length,
            pad_token_id=pad_token_id,
        )
    if spec.family == "roberta":
        from transformers import RobertaConfig

        # position ids start at pad_token_id + 1, so the table needs slack
        return RobertaConfig(
            vocab_size=vocab_size,
            hidden_size=spec.dim,
            num_hidden_layers=num_layers,
            num_attention_heads=heads,
            intermediate_size=intermediate,
            max_position_embeddings=sequence_length + pad_token_id + 2,
            pad_token_id=pad_token_id,
        )
    raise KeyError(f"unknown architecture family {spec.family!r}")


def model_class(spec: ModelSpec):
    if spec.family == "bert":
        from transformers import BertModel

        return BertModel
    if spec.family == "distilbert":
        from transformers import DistilBertModel

        return DistilBertModel
    if spec.family == "albert":
        from transformers import AlbertModel

        return AlbertModel
    if spec.family == "roberta":
        from transformers import RobertaModel

        return RobertaModel
    raise KeyError(f"unknown architecture family {spec.family!r}")
