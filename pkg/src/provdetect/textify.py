"""Render process records as deterministic natural-language sentences.

Template: ``Process {id} has event {phrase} and event {phrase} ... .`` with
attributes in dataset column order. Rows with no attributes render as
``Process {id} has no events.`` so every record produces a non-empty
sentence. Output is bit-stable: single spaces, one terminal period, no
stylistic variation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .dataset import AspectDataset, ProcessRecord
from .errors import ValidationError


@dataclass(frozen=True)
class Sentence:
    process_id: str
    text: str

    def __post_init__(self) -> None:
        if not self.text:
            raise ValidationError("sentence text must be non-empty")
        if not self.text.startswith(f"Process {self.process_id}"):
            raise ValidationError(
                "sentence must begin with 'Process <id>', got "
                f"{self.text[:40]!r}"
            )


@dataclass(frozen=True)
class PhraseMap:
    """Optional attribute-name -> descriptive-phrase mapping.

    Unmapped attributes fall back to their raw names, so the identity map is
    simply ``PhraseMap()``.
    """

    phrases: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, phrase in self.phrases.items():
            if not phrase:
                raise ValidationError(f"empty phrase for attribute {name!r}")

    def get(self, attribute: str) -> str:
        return self.phrases.get(attribute, attribute)

    @classmethod
    def from_file(cls, path: str | Path) -> "PhraseMap":
        from .cli import read_config_file

        raw = read_config_file(path)
        return cls({str(k): str(v) for k, v in raw.items()})


IDENTITY_PHRASES = PhraseMap()


def record_to_sentence(
    record: ProcessRecord, phrases: PhraseMap = IDENTITY_PHRASES
) -> Sentence:
    """Render one record with its attributes in the given order."""
    if not record.attributes:
        return Sentence(record.process_id, f"Process {record.process_id} has no events.")
    body = " and ".join(f"event {phrases.get(a)}" for a in record.attributes)
    return Sentence(record.process_id, f"Process {record.process_id} has {body}.")


def dataset_to_sentences(
    ds: AspectDataset, phrases: PhraseMap = IDENTITY_PHRASES
) -> list[Sentence]:
    """One sentence per row, in row order."""
    return [record_to_sentence(rec, phrases) for rec in ds.records()]
