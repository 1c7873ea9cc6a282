"""Confusion matrices and precision / recall / F1 / accuracy."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[gold, predicted]."""

    counts: np.ndarray

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion(preds, golds, num_classes: int) -> ConfusionMatrix:
    preds = np.asarray(preds, dtype=np.int64).reshape(-1)
    golds = np.asarray(golds, dtype=np.int64).reshape(-1)
    if preds.shape != golds.shape:
        raise ValueError(f"length mismatch: {preds.size} predictions vs {golds.size} golds")
    for arr in (preds, golds):
        if arr.size and (arr.min() < 0 or arr.max() >= num_classes):
            raise ValueError(f"label out of range 0..{num_classes - 1}")
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (golds, preds), 1)
    return ConfusionMatrix(counts)


def f1_from_pr(precision: float, recall: float) -> float:
    """Harmonic mean 2PR/(P+R), 0 when P+R is 0."""
    s = precision + recall
    if s == 0:
        return 0.0
    return 2.0 * precision * recall / s


def _ratio(num, den) -> float:
    return float(num) / float(den) if den else 0.0


@dataclass
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class MetricsReport:
    per_class: list[ClassScores]
    macro: dict
    micro: dict
    accuracy: float
    confusion: ConfusionMatrix
    header: dict = field(default_factory=dict)

    def to_dict(self, mapping=None) -> dict:
        per_class = []
        for label, s in enumerate(self.per_class):
            per_class.append(
                {
                    "label": label,
                    "emoji": mapping.emoji(label) if mapping is not None else None,
                    "precision": s.precision,
                    "recall": s.recall,
                    "f1": s.f1,
                    "support": s.support,
                }
            )
        out = {
            "accuracy": self.accuracy,
            "macro": dict(self.macro),
            "micro": dict(self.micro),
            "per_class": per_class,
            "confusion": self.confusion.counts.tolist(),
        }
        out.update(self.header)
        return out

    def to_json(self, mapping=None) -> str:
        return json.dumps(self.to_dict(mapping), indent=2, ensure_ascii=False)


def report(matrix: ConfusionMatrix) -> MetricsReport:
    counts = matrix.counts
    total = counts.sum()
    if total == 0:
        raise ValueError("cannot report on an empty confusion matrix")
    tp = np.diag(counts)
    col = counts.sum(axis=0)
    row = counts.sum(axis=1)
    per_class = []
    for c in range(counts.shape[0]):
        p = _ratio(tp[c], col[c])
        r = _ratio(tp[c], row[c])
        per_class.append(ClassScores(p, r, f1_from_pr(p, r), int(row[c])))
    k = len(per_class)
    macro = {
        "precision": sum(s.precision for s in per_class) / k,
        "recall": sum(s.recall for s in per_class) / k,
        "f1": sum(s.f1 for s in per_class) / k,
    }
    # Single-label: summed FP equals summed FN, so micro P = micro R = accuracy.
    tp_sum = int(tp.sum())
    fp_sum = int((col - tp).sum())
    fn_sum = int((row - tp).sum())
    mp = _ratio(tp_sum, tp_sum + fp_sum)
    mr = _ratio(tp_sum, tp_sum + fn_sum)
    micro = {"precision": mp, "recall": mr, "f1": f1_from_pr(mp, mr)}
    return MetricsReport(per_class, macro, micro, _ratio(tp_sum, total), matrix)


def evaluate_predictions(preds, golds, num_classes: int) -> MetricsReport:
    return report(confusion(preds, golds, num_classes))
