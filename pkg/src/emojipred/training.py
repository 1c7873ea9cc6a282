"""Masked-LM pretraining, supervised fine-tuning, evaluation and curve export."""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .metrics import MetricsReport, evaluate_predictions
from .model import EmojiTransformer, trim_batch
from .numeric import AdamState, RngStreams, adam_step, backward, clip_grad_norm, cross_entropy, no_grad
from .tokenizer import MASK, NUM_SPECIAL

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MLMConfig:
    mask_prob: float = 0.15
    replace_mask_frac: float = 0.8
    replace_random_frac: float = 0.1
    keep_frac: float = 0.1

    def __post_init__(self):
        fracs = (self.replace_mask_frac, self.replace_random_frac, self.keep_frac)
        if any(f < 0 for f in fracs) or abs(sum(fracs) - 1.0) > 1e-9:
            raise ValueError(f"MLM corruption fractions must be non-negative and sum to 1, got {fracs}")
        if not 0.0 <= self.mask_prob <= 1.0:
            raise ValueError("mask_prob must be in [0, 1]")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 16
    lr: float = 1e-3
    seed: int = 0
    early_stop_patience: int | None = None
    mlm: MLMConfig = field(default_factory=MLMConfig)
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    clip_norm: float | None = None
    keep_best: bool = True

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if isinstance(d.get("mlm"), dict):
            d["mlm"] = MLMConfig(**d["mlm"])
        return cls(**d)


@dataclass(frozen=True)
class EncodedSet:
    ids: np.ndarray
    mask: np.ndarray
    labels: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.ids)

    def subset(self, idx) -> "EncodedSet":
        return EncodedSet(self.ids[idx], self.mask[idx], None if self.labels is None else self.labels[idx])


@dataclass(frozen=True)
class CurveRow:
    epoch: int
    train_loss: float
    val_loss: float
    val_accuracy: float
    wall_seconds: float


CURVE_COLUMNS = ("epoch", "train_loss", "val_loss", "val_accuracy", "wall_seconds")


@dataclass
class TrainingCurve:
    rows: list[CurveRow] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def append(self, row: CurveRow) -> None:
        expected = len(self.rows) + 1
        if row.epoch != expected:
            raise ValueError(f"curve epochs must be contiguous: got {row.epoch}, expected {expected}")
        if not (math.isfinite(row.train_loss) and math.isfinite(row.val_loss)):
            raise ValueError(f"non-finite loss at epoch {row.epoch}")
        self.rows.append(row)

    def column(self, name: str) -> list[float]:
        return [getattr(r, name) for r in self.rows]

    def deterministic_part(self) -> list[tuple]:
        """Rows without wall-clock time (the part two identical runs must share)."""
        return [(r.epoch, r.train_loss, r.val_loss, r.val_accuracy) for r in self.rows]


def export_curve(curve: TrainingCurve, path) -> None:
    if not curve.rows:
        raise ValueError("cannot export an empty curve")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_COLUMNS)
        for r in curve.rows:
            w.writerow([r.epoch] + [f"{getattr(r, c):.9g}" for c in CURVE_COLUMNS[1:]])


def load_curve(path) -> TrainingCurve:
    curve = TrainingCurve()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CURVE_COLUMNS:
            raise ValueError(f"{path}: unexpected curve header {reader.fieldnames}")
        for row in reader:
            curve.append(
                CurveRow(
                    int(row["epoch"]),
                    float(row["train_loss"]),
                    float(row["val_loss"]),
                    float(row["val_accuracy"]),
                    float(row["wall_seconds"]),
                )
            )
    return curve


def moving_average(values, window: int = 5) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    window = max(1, min(window, len(values)))
    return np.convolve(values, np.ones(window) / window, mode="valid")


def tail_nonincreasing(values, window: int = 5, tol: float = 1e-3) -> bool:
    """Is the moving average over the final half of ``values`` non-increasing within ``tol``?"""
    values = list(values)
    tail = values[len(values) // 2 :]
    if len(tail) < 2:
        return True
    sm = moving_average(tail, window)
    return bool(np.all(np.diff(sm) <= tol))


def _log_epoch(prefix: str, row: CurveRow) -> None:
    logger.info(
        "%sepoch=%d train_loss=%.6f val_loss=%.6f val_acc=%.4f",
        prefix,
        row.epoch,
        row.train_loss,
        row.val_loss,
        row.val_accuracy,
    )


def _adam(config: TrainConfig) -> AdamState:
    return AdamState(lr=config.lr, beta1=config.beta1, beta2=config.beta2, eps=config.adam_eps)


def _step(loss, params, state: AdamState, config: TrainConfig) -> float:
    value = loss.item()
    backward(loss)
    if config.clip_norm:
        clip_grad_norm(params, config.clip_norm)
    adam_step(params, state)
    return value


# ---------------------------------------------------------------------------
# masked language modelling


def mask_tokens(ids: np.ndarray, mask: np.ndarray, vocab_size: int, mlm: MLMConfig, rng: np.random.Generator):
    """Choose MLM targets among real, non-special tokens and corrupt them.

    Returns ``(corrupted_ids, rows, cols, targets)``.
    """
    maskable = (np.asarray(mask) == 1) & (ids >= NUM_SPECIAL)
    selected = maskable & (rng.random(ids.shape) < mlm.mask_prob)
    rows, cols = np.nonzero(selected)
    targets = ids[rows, cols].copy()
    corrupted = ids.copy()
    u = rng.random(len(rows))
    to_mask = u < mlm.replace_mask_frac
    to_random = (~to_mask) & (u < mlm.replace_mask_frac + mlm.replace_random_frac)
    corrupted[rows[to_mask], cols[to_mask]] = MASK
    if to_random.any():
        corrupted[rows[to_random], cols[to_random]] = rng.integers(NUM_SPECIAL, vocab_size, size=int(to_random.sum()))
    return corrupted, rows, cols, targets


def mlm_loss(model: EmojiTransformer, ids, mask, rows, cols, targets, train: bool = False, rng=None):
    hidden = model.hidden(ids, mask, train, rng)
    return cross_entropy(model.mlm_logits(hidden, rows, cols), targets)


def _check_maskable(data: EncodedSet, mlm: MLMConfig) -> None:
    if len(data) == 0:
        raise ValueError("MLM corpus is empty")
    if mlm.mask_prob <= 0.0 or not np.any((data.mask == 1) & (data.ids >= NUM_SPECIAL)):
        raise ValueError("no maskable positions: need mask_prob > 0 and at least one non-special token")


def mlm_eval(model: EmojiTransformer, data: EncodedSet, mlm: MLMConfig, rng, batch_size: int = 256):
    """(masked loss, top-1 recovery) in eval mode under the masking drawn from ``rng``."""
    total, correct, count = 0.0, 0, 0
    with no_grad():
        for s in range(0, len(data), batch_size):
            ids, mask = trim_batch(data.ids[s : s + batch_size], data.mask[s : s + batch_size])
            corrupted, rows, cols, targets = mask_tokens(ids, mask, model.config.vocab_size, mlm, rng)
            if len(rows) == 0:
                continue
            hidden = model.hidden(corrupted, mask)
            logits = model.mlm_logits(hidden, rows, cols)
            total += cross_entropy(logits, targets).item() * len(rows)
            correct += int((logits.data.argmax(axis=1) == targets).sum())
            count += len(rows)
    if count == 0:
        return float("nan"), 0.0
    return total / count, correct / count


def mlm_recovery(model: EmojiTransformer, data: EncodedSet, seed: int = 0, mask_prob: float = 0.15) -> float:
    """Top-1 accuracy at recovering tokens replaced by [MASK]."""
    rng = RngStreams(seed).fresh("mlm-recovery")
    cfg = MLMConfig(mask_prob=mask_prob, replace_mask_frac=1.0, replace_random_frac=0.0, keep_frac=0.0)
    return mlm_eval(model, data, cfg, rng)[1]


def pretrain_mlm(model: EmojiTransformer, corpus: EncodedSet, config: TrainConfig) -> TrainingCurve:
    """Masked-LM training of the encoder. Validation columns report masked loss and
    top-1 recovery on the corpus under a fixed evaluation masking."""
    _check_maskable(corpus, config.mlm)
    streams = RngStreams(config.seed)
    shuffle_rng, mask_rng, drop_rng = streams.get("mlm-shuffling"), streams.get("masking"), streams.get("mlm-dropout")
    params = model.encoder.named_parameters()
    state = _adam(config)
    curve = TrainingCurve()
    n = len(corpus)
    for epoch in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        perm = shuffle_rng.permutation(n)
        total, count = 0.0, 0
        for s in range(0, n, config.batch_size):
            idx = perm[s : s + config.batch_size]
            ids, mask = trim_batch(corpus.ids[idx], corpus.mask[idx])
            corrupted, rows, cols, targets = mask_tokens(ids, mask, model.config.vocab_size, config.mlm, mask_rng)
            if len(rows) == 0:
                continue
            loss = mlm_loss(model, corrupted, mask, rows, cols, targets, True, drop_rng)
            total += _step(loss, params, state, config) * len(rows)
            count += len(rows)
        train_loss = total / count if count else float("nan")
        val_loss, val_acc = mlm_eval(model, corpus, config.mlm, streams.fresh("mlm-eval"))
        if not math.isfinite(train_loss):
            train_loss = val_loss
        row = CurveRow(epoch, train_loss, val_loss, val_acc, time.perf_counter() - t0)
        curve.append(row)
        _log_epoch("mlm ", row)
    return curve


# ---------------------------------------------------------------------------
# classification


def classification_eval(model: EmojiTransformer, data: EncodedSet, batch_size: int = 256):
    """(mean cross-entropy, accuracy) with dropout off."""
    probs = model.predict_proba(data.ids, data.mask, batch_size)
    labels = data.labels
    p = np.clip(probs[np.arange(len(labels)), labels], 1e-300, None)
    return float(-np.log(p).mean()), float((probs.argmax(axis=1) == labels).mean())


def fit_classifier(
    model: EmojiTransformer, train: EncodedSet, val: EncodedSet | None, config: TrainConfig
) -> TrainingCurve:
    """Minibatch cross-entropy + Adam over the whole model.

    ``val`` empty or None means the train set is scored for the validation
    columns. With ``keep_best`` the weights of the lowest validation loss
    epoch are restored at the end.
    """
    if len(train) == 0:
        raise ValueError("empty training set")
    if train.labels.max() >= model.config.num_classes:
        raise ValueError("training labels exceed the head's num_classes")
    if val is None or len(val) == 0:
        val = train
    streams = RngStreams(config.seed)
    shuffle_rng, drop_rng = streams.get("shuffling"), streams.get("dropout")
    params = model.parameters()
    state = _adam(config)
    curve = TrainingCurve()
    best_loss, best_state, stale = math.inf, None, 0
    n = len(train)
    for epoch in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        perm = shuffle_rng.permutation(n)
        total = 0.0
        for s in range(0, n, config.batch_size):
            idx = perm[s : s + config.batch_size]
            ids, mask = trim_batch(train.ids[idx], train.mask[idx])
            loss = cross_entropy(model.logits(ids, mask, True, drop_rng), train.labels[idx])
            total += _step(loss, params, state, config) * len(idx)
        val_loss, val_acc = classification_eval(model, val)
        row = CurveRow(epoch, total / n, val_loss, val_acc, time.perf_counter() - t0)
        curve.append(row)
        _log_epoch("", row)
        if val_loss < best_loss:
            best_loss, stale = val_loss, 0
            if config.keep_best:
                best_state = model.snapshot()
        else:
            stale += 1
            if config.early_stop_patience is not None and stale >= config.early_stop_patience:
                logger.info("early stop after epoch %d", epoch)
                break
    if best_state is not None:
        model.load_state_dict(best_state)
    return curve


def finetune(artifacts, bundle, config: TrainConfig) -> TrainingCurve:
    """Fine-tune ``artifacts.model`` on a :class:`~emojipred.data.DatasetBundle`."""
    if artifacts.model.config.num_classes != bundle.num_classes:
        raise ValueError(
            f"head has {artifacts.model.config.num_classes} classes but the dataset has {bundle.num_classes}"
        )
    train = artifacts.encode_records(bundle.train)
    val = artifacts.encode_records(bundle.validation)
    return fit_classifier(artifacts.model, train, val, config)


def evaluate(artifacts, records, clean_config=None) -> MetricsReport:
    """Full-pipeline predictions on labeled ``records`` scored by the metrics module."""
    if clean_config is not None and clean_config != artifacts.clean_config:
        artifacts = artifacts.with_clean_config(clean_config)
    golds = np.array([r.label for r in records], dtype=np.int64)
    preds = artifacts.predict_labels([r.text for r in records])
    return evaluate_predictions(preds, golds, artifacts.model.config.num_classes)


def write_text_atomic(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)
