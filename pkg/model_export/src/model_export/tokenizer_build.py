"""Offline WordPiece tokenizer construction.

The vocabulary is built directly from the fixed corpus rather than
trained: the trainer's merge tie-breaks depend on hash iteration order
and change between runs. Explicit construction is deterministic: special
tokens first, then every corpus character as both a word-initial and a
continuation ("##") piece, then every whole corpus word. Character pieces
guarantee that any ASCII word decomposes without hitting [UNK].

Special token ids are pinned: [PAD]=0, [UNK]=1, [CLS]=2, [SEP]=3,
[MASK]=4. The saved tokenizer.json is re-serialized with sorted keys so
the artifact bytes are stable too.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

from .corpus import tokenizer_corpus

PAD_TOKEN = "[PAD]"
UNK_TOKEN = "[UNK]"
CLS_TOKEN = "[CLS]"
SEP_TOKEN = "[SEP]"
MASK_TOKEN = "[MASK]"
SPECIAL_TOKENS = (PAD_TOKEN, UNK_TOKEN, CLS_TOKEN, SEP_TOKEN, MASK_TOKEN)

PAD_TOKEN_ID = 0

# mirrors BertNormalizer(lowercase) + BertPreTokenizer: lowercase, split on
# whitespace, isolate punctuation characters
_WORD_RE = re.compile(r"\w+|[^\w\s]")


def _pre_tokenize(sentence: str) -> list[str]:
    return _WORD_RE.findall(sentence.lower())


def build_vocab(extra_sentences: list[str] | None = None) -> dict[str, int]:
    """Deterministic WordPiece vocabulary over the corpus."""
    words: set[str] = set()
    for sentence in tokenizer_corpus() + (extra_sentences or []):
        words.update(_pre_tokenize(sentence))
    chars = {c for w in words for c in w}
    # full lowercase alphabet and digits, so unseen ASCII words decompose
    # into character pieces instead of [UNK]
    chars = sorted(chars | set("abcdefghijklmnopqrstuvwxyz0123456789"))
    vocab: dict[str, int] = {}
    for token in SPECIAL_TOKENS:
        vocab[token] = len(vocab)
    for c in chars:
        vocab[c] = len(vocab)
    for c in chars:
        vocab[f"##{c}"] = len(vocab)
    for word in sorted(words):
        if word not in vocab:
            vocab[word] = len(vocab)
    return vocab


def build_tokenizer():
    """The corpus tokenizer; returns a tokenizers.Tokenizer."""
    from tokenizers import Tokenizer, models, normalizers, pre_tokenizers
    from tokenizers.processors import TemplateProcessing

    vocab = build_vocab()
    tokenizer = Tokenizer(models.WordPiece(vocab, unk_token=UNK_TOKEN))
    tokenizer.normalizer = normalizers.BertNormalizer(lowercase=True)
    tokenizer.pre_tokenizer = pre_tokenizers.BertPreTokenizer()
    tokenizer.post_processor = TemplateProcessing(
        single=f"{CLS_TOKEN} $A {SEP_TOKEN}",
        pair=f"{CLS_TOKEN} $A {SEP_TOKEN} $B {SEP_TOKEN}",
        special_tokens=[
            (CLS_TOKEN, vocab[CLS_TOKEN]),
            (SEP_TOKEN, vocab[SEP_TOKEN]),
        ],
    )
    return tokenizer


def write_tokenizer(out_dir: str | Path) -> Path:
    """Build and save tokenizer.json with stable bytes; returns its path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tokenizer = build_tokenizer()
    payload = json.loads(tokenizer.to_str())
    path = out_dir / "tokenizer.json"
    path.write_text(
        json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )
    return path
