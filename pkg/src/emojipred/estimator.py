"""scikit-learn estimators wrapping the pipeline stages.

``TweetCleaner`` is a stateless transformer, ``EmojiClassifier`` runs the
whole raw-text → emoji pipeline (cleaning, vocabulary, optional MLM
pretraining, fine-tuning), and ``BagOfWordsClassifier`` is the
traditional baseline, meant to sit behind a ``TweetCleaner`` in a Pipeline.
"""

from __future__ import annotations

import logging

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .artifacts import ModelArtifacts
from .baseline import BowFeatures, featurize_texts, predict_logreg, train_logreg
from .data import LabelMapping, RawTweetRecord, split_train_val
from .model import EmojiTransformer, ModelConfig
from .numeric import RngStreams
from .preprocess import CleanConfig, preprocess_text
from .tokenizer import build_vocab, encode_batch
from .training import EncodedSet, MLMConfig, TrainConfig, fit_classifier, pretrain_mlm
from .validation import check_labels, check_texts

logger = logging.getLogger(__name__)


def _encode_cleaned(records, vocab, max_len) -> EncodedSet:
    ids, mask = encode_batch([r.text for r in records], vocab, max_len)
    return EncodedSet(ids, mask, np.array([r.label for r in records], dtype=np.int64))


class TweetCleaner(BaseEstimator, TransformerMixin):
    def __init__(
        self,
        lowercase=True,
        strip_punctuation=True,
        keep_hashtags=True,
        keep_mentions=True,
        enable_stemming=True,
        collapse_whitespace=True,
    ):
        self.lowercase = lowercase
        self.strip_punctuation = strip_punctuation
        self.keep_hashtags = keep_hashtags
        self.keep_mentions = keep_mentions
        self.enable_stemming = enable_stemming
        self.collapse_whitespace = collapse_whitespace

    def clean_config(self) -> CleanConfig:
        return CleanConfig(
            lowercase=self.lowercase,
            strip_punctuation=self.strip_punctuation,
            keep_hashtags=self.keep_hashtags,
            keep_mentions=self.keep_mentions,
            enable_stemming=self.enable_stemming,
            collapse_whitespace=self.collapse_whitespace,
        )

    def fit(self, X, y=None):
        check_texts(X)
        return self

    def transform(self, X):
        cfg = self.clean_config()
        return [preprocess_text(t, cfg) for t in check_texts(X)]


_CLEAN_PARAMS = ("lowercase", "strip_punctuation", "keep_hashtags", "keep_mentions", "enable_stemming", "collapse_whitespace")


class EmojiClassifier(BaseEstimator, ClassifierMixin):
    """Raw tweets in, emoji class ids out.

    Parameters mirror :class:`ModelConfig`, :class:`TrainConfig` and
    :class:`CleanConfig`; ``pretrain_epochs > 0`` runs masked-LM pretraining
    on the training texts before fine-tuning. ``mapping`` maps class id to
    emoji glyph; without one, glyphs default to the class id as text.
    """

    def __init__(
        self,
        num_layers=2,
        hidden_size=128,
        num_heads=4,
        ff_size=512,
        max_len=64,
        dropout=0.1,
        pooling="mean",
        epochs=10,
        batch_size=16,
        lr=1e-3,
        seed=0,
        early_stop_patience=None,
        clip_norm=None,
        keep_best=True,
        pretrain_epochs=0,
        pretrain_batch_size=16,
        mask_prob=0.15,
        min_freq=1,
        max_vocab=20000,
        val_fraction=0.1,
        lowercase=True,
        strip_punctuation=True,
        keep_hashtags=True,
        keep_mentions=True,
        enable_stemming=True,
        collapse_whitespace=True,
        mapping=None,
    ):
        self.num_layers = num_layers
        self.hidden_size = hidden_size
        self.num_heads = num_heads
        self.ff_size = ff_size
        self.max_len = max_len
        self.dropout = dropout
        self.pooling = pooling
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.seed = seed
        self.early_stop_patience = early_stop_patience
        self.clip_norm = clip_norm
        self.keep_best = keep_best
        self.pretrain_epochs = pretrain_epochs
        self.pretrain_batch_size = pretrain_batch_size
        self.mask_prob = mask_prob
        self.min_freq = min_freq
        self.max_vocab = max_vocab
        self.val_fraction = val_fraction
        self.lowercase = lowercase
        self.strip_punctuation = strip_punctuation
        self.keep_hashtags = keep_hashtags
        self.keep_mentions = keep_mentions
        self.enable_stemming = enable_stemming
        self.collapse_whitespace = collapse_whitespace
        self.mapping = mapping

    def clean_config(self) -> CleanConfig:
        return CleanConfig(**{k: getattr(self, k) for k in _CLEAN_PARAMS})

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr=self.lr,
            seed=self.seed,
            early_stop_patience=self.early_stop_patience,
            mlm=MLMConfig(mask_prob=self.mask_prob),
            clip_norm=self.clip_norm,
            keep_best=self.keep_best,
        )

    def _mapping(self, num_classes: int) -> LabelMapping:
        if self.mapping is None:
            return LabelMapping({i: str(i) for i in range(num_classes)})
        mapping = self.mapping if isinstance(self.mapping, LabelMapping) else LabelMapping(dict(self.mapping))
        if mapping.num_classes < num_classes:
            raise ValueError(f"mapping covers {mapping.num_classes} classes but labels reach {num_classes - 1}")
        return mapping

    def fit(self, X, y, X_val=None, y_val=None):
        """Train on raw texts ``X`` with class ids ``y``.

        Without ``X_val``, a stratified ``val_fraction`` of the data is held
        out for validation (``val_fraction=0`` validates on the training set).
        """
        texts = check_texts(X)
        labels = check_labels(y, len(texts))
        if not texts:
            raise ValueError("cannot fit on an empty dataset")
        clean = self.clean_config()
        records = []
        for i, (t, lab) in enumerate(zip(texts, labels)):
            cleaned = preprocess_text(t, clean)
            if cleaned:
                records.append(RawTweetRecord(cleaned, int(lab), str(i)))
        if not records:
            raise ValueError("every text is empty after cleaning")
        if len(records) < len(texts):
            logger.info("fit: dropped %d texts that were empty after cleaning", len(texts) - len(records))
        if X_val is not None:
            val_texts = [preprocess_text(t, clean) for t in check_texts(X_val, "X_val")]
            val_labels = check_labels(y_val, len(val_texts), "y_val")
            val = [RawTweetRecord(t, int(lab)) for t, lab in zip(val_texts, val_labels)]
            train = records
        elif self.val_fraction and len(records) >= 2:
            train, val = split_train_val(records, self.val_fraction, self.seed)
        else:
            train, val = records, []

        num_classes = int(max([r.label for r in records] + [r.label for r in val])) + 1
        self.mapping_ = self._mapping(num_classes)
        num_classes = self.mapping_.num_classes
        self.classes_ = np.arange(num_classes)

        self.vocab_ = build_vocab([r.text for r in train], self.min_freq, self.max_vocab)
        config = ModelConfig(
            vocab_size=len(self.vocab_),
            num_classes=num_classes,
            num_layers=self.num_layers,
            hidden_size=self.hidden_size,
            num_heads=self.num_heads,
            ff_size=self.ff_size,
            max_len=self.max_len,
            dropout=self.dropout,
            pooling=self.pooling,
        )
        model = EmojiTransformer(config, RngStreams(self.seed).get("init"))
        logger.info("model: %d parameters", model.num_parameters())
        self.artifacts_ = ModelArtifacts(model, self.vocab_, self.mapping_, clean)
        train_set = _encode_cleaned(train, self.vocab_, self.max_len)
        val_set = _encode_cleaned(val, self.vocab_, self.max_len) if val else None

        cfg = self.train_config()
        self.pretrain_curve_ = None
        if self.pretrain_epochs:
            pre_cfg = TrainConfig(
                epochs=self.pretrain_epochs, batch_size=self.pretrain_batch_size, lr=self.lr, seed=self.seed, mlm=cfg.mlm
            )
            self.pretrain_curve_ = pretrain_mlm(model, EncodedSet(train_set.ids, train_set.mask), pre_cfg)
        self.curve_ = fit_classifier(model, train_set, val_set, cfg)
        self.n_train_, self.n_val_ = len(train), len(val)
        return self

    @classmethod
    def from_artifacts(cls, artifacts: ModelArtifacts) -> "EmojiClassifier":
        cfg = artifacts.model.config
        est = cls(
            num_layers=cfg.num_layers,
            hidden_size=cfg.hidden_size,
            num_heads=cfg.num_heads,
            ff_size=cfg.ff_size,
            max_len=cfg.max_len,
            dropout=cfg.dropout,
            pooling=cfg.pooling,
            mapping=dict(artifacts.mapping.entries),
            **artifacts.clean_config.to_dict(),
        )
        est.artifacts_ = artifacts
        est.vocab_ = artifacts.vocab
        est.mapping_ = artifacts.mapping
        est.classes_ = np.arange(cfg.num_classes)
        return est

    def predict_proba(self, X) -> np.ndarray:
        check_is_fitted(self, "artifacts_")
        return self.artifacts_.predict_proba(check_texts(X))

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "artifacts_")
        return self.classes_[self.predict_proba(X).argmax(axis=1)]

    def predict_emoji(self, X) -> list[str]:
        return [self.mapping_.emoji(k) for k in self.predict(X)]


class BagOfWordsClassifier(BaseEstimator, ClassifierMixin):
    """Multinomial logistic regression over token counts of already-cleaned text."""

    def __init__(self, min_freq=1, max_vocab=20000, binary=False, epochs=300, lr=0.01, l2=1e-4, seed=0, vocabulary=None):
        self.min_freq = min_freq
        self.max_vocab = max_vocab
        self.binary = binary
        self.epochs = epochs
        self.lr = lr
        self.l2 = l2
        self.seed = seed
        self.vocabulary = vocabulary

    def fit(self, X, y):
        texts = check_texts(X)
        labels = check_labels(y, len(texts))
        self.vocab_ = self.vocabulary if self.vocabulary is not None else build_vocab(texts, self.min_freq, self.max_vocab)
        self.classes_ = np.arange(int(labels.max()) + 1)
        feats = BowFeatures(featurize_texts(texts, self.vocab_, self.binary), labels)
        fit = train_logreg(feats, len(self.classes_), self.epochs, self.lr, self.l2, self.seed)
        self.coef_, self.intercept_, self.loss_curve_ = fit.weights, fit.bias, fit.losses
        return self

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "coef_")
        return featurize_texts(check_texts(X), self.vocab_, self.binary) @ self.coef_ + self.intercept_

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "coef_")
        return predict_logreg(self.coef_, self.intercept_, featurize_texts(check_texts(X), self.vocab_, self.binary))
