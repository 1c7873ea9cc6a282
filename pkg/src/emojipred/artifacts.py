"""Everything needed to go from a raw tweet to an emoji: cleaner, vocabulary, model, mapping."""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .data import LabelMapping
from .errors import CheckpointError
from .model import EmojiTransformer
from .preprocess import CleanConfig, preprocess_text
from .tokenizer import Vocabulary, encode_batch
from .training import EncodedSet

CHECKPOINT_NAME = "model.ckpt"
VOCAB_NAME = "vocab.txt"


@dataclass
class ModelArtifacts:
    model: EmojiTransformer
    vocab: Vocabulary
    mapping: LabelMapping
    clean_config: CleanConfig

    def __post_init__(self):
        cfg = self.model.config
        if cfg.vocab_size != len(self.vocab):
            raise CheckpointError(f"model expects {cfg.vocab_size} tokens, vocabulary has {len(self.vocab)}")
        if cfg.num_classes != self.mapping.num_classes:
            raise CheckpointError(f"model has {cfg.num_classes} classes, mapping has {self.mapping.num_classes}")

    def with_clean_config(self, clean_config: CleanConfig) -> "ModelArtifacts":
        return replace(self, clean_config=clean_config)

    def encode_texts(self, texts, labels=None) -> EncodedSet:
        cleaned = [preprocess_text(t, self.clean_config) for t in texts]
        ids, mask = encode_batch(cleaned, self.vocab, self.model.config.max_len)
        return EncodedSet(ids, mask, None if labels is None else np.asarray(labels, dtype=np.int64))

    def encode_records(self, records) -> EncodedSet:
        return self.encode_texts([r.text for r in records], [r.label for r in records])

    def predict_proba(self, texts) -> np.ndarray:
        enc = self.encode_texts(texts)
        return self.model.predict_proba(enc.ids, enc.mask)

    def predict_labels(self, texts) -> np.ndarray:
        return self.predict_proba(texts).argmax(axis=1)

    def save(self, directory) -> tuple[Path, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        vocab_path = directory / VOCAB_NAME
        ckpt_path = directory / CHECKPOINT_NAME
        self.vocab.save(vocab_path)
        extra = {"mapping": self.mapping.to_dict(), "clean_config": self.clean_config.to_dict()}
        save_checkpoint(self.model, self.vocab.sha256(), ckpt_path, extra)
        return ckpt_path, vocab_path

    @classmethod
    def load(cls, checkpoint_path, vocab_path=None, mapping: LabelMapping | None = None) -> "ModelArtifacts":
        checkpoint_path = Path(checkpoint_path)
        vocab_path = Path(vocab_path) if vocab_path else checkpoint_path.with_name(VOCAB_NAME)
        ckpt = load_checkpoint(checkpoint_path)
        if not vocab_path.is_file():
            raise FileNotFoundError(f"no such file: {vocab_path}")
        vocab = Vocabulary.load(vocab_path)
        if vocab.sha256() != ckpt.vocab_sha256:
            raise CheckpointError(f"vocabulary {vocab_path} does not match the checkpoint (sha256 differs)")
        if mapping is None:
            if "mapping" not in ckpt.extra:
                raise CheckpointError("checkpoint carries no label mapping; pass one explicitly")
            mapping = LabelMapping.from_dict(ckpt.extra["mapping"])
        clean = CleanConfig.from_dict(ckpt.extra["clean_config"]) if "clean_config" in ckpt.extra else CleanConfig.default()
        return cls(ckpt.model, vocab, mapping, clean)


def predict_emoji(text: str, artifacts: ModelArtifacts, clean_config: CleanConfig | None = None):
    """(label, emoji, probability vector) for one raw tweet."""
    if clean_config is not None:
        artifacts = artifacts.with_clean_config(clean_config)
    probs = artifacts.predict_proba([text])[0]
    label = int(probs.argmax())
    return label, artifacts.mapping.emoji(label), probs
