"""Bag-of-words multinomial logistic regression, trained with the package's own Adam."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .data import records_digest
from .metrics import MetricsReport, evaluate_predictions
from .numeric import AdamState, Parameter, RngStreams, Tensor, adam_step, backward, cross_entropy, float64_mode, matmul
from .tokenizer import NUM_SPECIAL, Vocabulary


@dataclass(frozen=True)
class BowFeatures:
    """matrix[i, j] = count (or presence) of vocabulary id ``j + 5`` in record i."""

    matrix: np.ndarray
    labels: np.ndarray


def featurize_texts(texts, vocab: Vocabulary, binary: bool = False) -> np.ndarray:
    texts = list(texts)
    width = len(vocab) - NUM_SPECIAL
    x = np.zeros((len(texts), width), dtype=np.float64)
    for i, text in enumerate(texts):
        for tok, c in Counter(text.split()).items():
            j = vocab.token_to_id.get(tok)
            if j is not None and j >= NUM_SPECIAL:
                x[i, j - NUM_SPECIAL] = 1.0 if binary else c
    return x


def featurize(records, vocab: Vocabulary, binary: bool = False) -> BowFeatures:
    records = list(records)
    labels = np.array([r.label for r in records], dtype=np.int64)
    return BowFeatures(featurize_texts([r.text for r in records], vocab, binary), labels)


@dataclass
class LogRegFit:
    weights: np.ndarray
    bias: np.ndarray
    losses: list[float]


def train_logreg(
    features: BowFeatures,
    num_classes: int,
    epochs: int = 200,
    lr: float = 0.01,
    l2: float = 1e-4,
    seed: int = 0,
) -> LogRegFit:
    """Full-batch Adam on mean softmax cross-entropy + ``l2/2 * ||W||²`` (bias unpenalized)."""
    x, y = features.matrix, features.labels
    n = len(y)
    if n < num_classes:
        raise ValueError(f"need at least {num_classes} records, got {n}")
    if len(np.unique(y)) < 2:
        raise ValueError("degenerate data: fewer than two distinct labels")
    with float64_mode():
        rng = RngStreams(seed).get("init")
        w = Parameter(rng.normal(0.0, 0.01, (x.shape[1], num_classes)), "baseline.weight")
        b = Parameter(np.zeros(num_classes), "baseline.bias")
        xt = Tensor(x, dtype=np.float64)
        state = AdamState(lr=lr)
        losses = []
        for _ in range(epochs):
            loss = cross_entropy(matmul(xt, w) + b, y)
            if l2:
                loss = loss + (w * w).sum() * (0.5 * l2)
            losses.append(loss.item())
            backward(loss)
            adam_step([w, b], state)
    return LogRegFit(w.data.copy(), b.data.copy(), losses)


def predict_logreg(weights, bias, x: np.ndarray) -> np.ndarray:
    return (x @ weights + bias).argmax(axis=1)


def eval_baseline(weights, bias, records, vocab: Vocabulary, binary: bool = False, majority_label=None) -> MetricsReport:
    """Metrics of the fitted baseline, with a majority-class row and the split digest in the header."""
    records = list(records)
    feats = featurize(records, vocab, binary)
    rep = evaluate_predictions(predict_logreg(weights, bias, feats.matrix), feats.labels, len(bias))
    if majority_label is None:
        majority_label = int(np.bincount(feats.labels, minlength=len(bias)).argmax())
    rep.header = {
        "majority_class": {
            "label": int(majority_label),
            "accuracy": float((feats.labels == majority_label).mean()),
        },
        "split_sha256": records_digest(records),
    }
    return rep
