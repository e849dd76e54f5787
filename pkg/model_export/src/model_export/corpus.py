"""Deterministic provenance-sentence corpus.

Used twice: as training text for the offline tokenizer build and as the
golden fixture sentences. The canonical example sentence comes first; the
rest are generated from a fixed event vocabulary with a seeded RNG so the
corpus never changes between runs.
"""

from __future__ import annotations

import random

CANONICAL_SENTENCE = (
    "Process 123 has event open a file and event write to the file "
    "and event send network data."
)

_EVENTS = (
    "open a file",
    "write to the file",
    "read a file",
    "close the file",
    "send network data",
    "receive network data",
    "open a socket",
    "bind to a port",
    "fork a child process",
    "execute a binary",
    "map a memory region",
    "change file permissions",
    "delete a file",
    "rename a file",
    "create a directory",
    "query the registry",
    "write to the registry",
    "load a shared library",
    "send a signal",
    "wait for a child",
    "read environment variables",
    "spawn a shell",
)


def fixture_sentences(count: int = 24, seed: int = 20260818) -> list[str]:
    """The canonical sentence plus ``count - 1`` generated ones."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = random.Random(seed)
    sentences = [CANONICAL_SENTENCE]
    while len(sentences) < count:
        pid = rng.randrange(100, 10_000)
        events = rng.sample(_EVENTS, rng.randint(1, 6))
        if len(events) == 0:
            body = "has no events."
        else:
            body = "has event " + " and event ".join(events) + "."
        sentences.append(f"Process {pid} {body}")
    return sentences


def tokenizer_corpus() -> list[str]:
    """Training text for the offline tokenizer: the fixture sentences plus
    single-event sentences covering the whole event vocabulary."""
    corpus = fixture_sentences(count=64)
    corpus.extend(f"Process 1 has event {event}." for event in _EVENTS)
    corpus.append("Process 1 has no events.")
    return corpus
