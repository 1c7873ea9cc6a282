"""Word-level vocabulary and fixed-length encoding."""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

PAD, UNK, CLS, SEP, MASK = 0, 1, 2, 3, 4
SPECIAL_TOKENS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")
NUM_SPECIAL = len(SPECIAL_TOKENS)


class Vocabulary:
    """Token↔id bijection; ids 0..4 are always [PAD] [UNK] [CLS] [SEP] [MASK]."""

    def __init__(self, tokens):
        tokens = list(tokens)
        if tuple(tokens[:NUM_SPECIAL]) != SPECIAL_TOKENS:
            raise ValueError(f"vocabulary must start with {SPECIAL_TOKENS}")
        self.id_to_token = tokens
        self.token_to_id = {t: i for i, t in enumerate(tokens)}
        if len(self.token_to_id) != len(tokens):
            raise ValueError("duplicate token in vocabulary")
        for t in tokens:
            if not t or any(c.isspace() for c in t):
                raise ValueError(f"invalid vocabulary token {t!r}")

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.id_to_token == other.id_to_token

    def __contains__(self, token) -> bool:
        return token in self.token_to_id

    def lookup(self, token: str) -> int:
        return self.token_to_id.get(token, UNK)

    def to_text(self) -> str:
        return "".join(t + "\n" for t in self.id_to_token)

    def sha256(self) -> str:
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_text().encode("utf-8"))

    @classmethod
    def load(cls, path) -> "Vocabulary":
        text = Path(path).read_bytes().decode("utf-8")
        if not text.endswith("\n"):
            raise ValueError(f"{path}: vocabulary file must end with a newline")
        return cls(text[:-1].split("\n"))


def build_vocab(corpus, min_freq: int = 1, max_size: int = 20000) -> Vocabulary:
    """Specials, then tokens by descending frequency with lexicographic tie-break.

    ``max_size`` counts the specials.
    """
    if max_size < NUM_SPECIAL + 1:
        raise ValueError(f"max_size must be at least {NUM_SPECIAL + 1}")
    if min_freq < 1:
        raise ValueError("min_freq must be >= 1")
    corpus = list(corpus)
    if not corpus:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    counts = Counter(tok for text in corpus for tok in text.split())
    for s in SPECIAL_TOKENS:
        counts.pop(s, None)
    ranked = sorted((t for t, c in counts.items() if c >= min_freq), key=lambda t: (-counts[t], t))
    return Vocabulary(list(SPECIAL_TOKENS) + ranked[: max_size - NUM_SPECIAL])


@dataclass(frozen=True)
class TokenSequence:
    ids: np.ndarray
    attention_mask: np.ndarray
    true_length: int


def encode(text: str, vocab: Vocabulary, max_len: int = 64) -> TokenSequence:
    """``[CLS] tokens… [SEP]`` padded with [PAD]; long texts keep their head."""
    if max_len < 3:
        raise ValueError("max_len must be at least 3")
    body = [vocab.lookup(t) for t in text.split()][: max_len - 2]
    n = len(body) + 2
    ids = np.full(max_len, PAD, dtype=np.int64)
    ids[0] = CLS
    ids[1 : n - 1] = body
    ids[n - 1] = SEP
    mask = np.zeros(max_len, dtype=np.int64)
    mask[:n] = 1
    return TokenSequence(ids=ids, attention_mask=mask, true_length=n)


def encode_batch(texts, vocab: Vocabulary, max_len: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Stack encodings into ``ids`` and ``mask`` arrays of shape [N, max_len]."""
    seqs = [encode(t, vocab, max_len) for t in texts]
    if not seqs:
        return np.zeros((0, max_len), dtype=np.int64), np.zeros((0, max_len), dtype=np.int64)
    return np.stack([s.ids for s in seqs]), np.stack([s.attention_mask for s in seqs])


def decode(ids, vocab: Vocabulary) -> list[str]:
    out = []
    for i in np.asarray(ids).tolist():
        if not 0 <= i < len(vocab):
            raise ValueError(f"id {i} outside vocabulary of size {len(vocab)}")
        out.append(vocab.id_to_token[i])
    return out
