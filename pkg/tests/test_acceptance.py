"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Dataset-1 criterion reads the real files from ``$EMOJIPRED_DATASET1_DIR`` (or
``tests/data/dataset1/``): ``train_emoji.csv`` and ``tesss.csv``.
"""

import os
import time
from pathlib import Path

import numpy as np
import pytest

from emojipred.artifacts import ModelArtifacts
from emojipred.checkpoint import from_bytes, to_bytes
from emojipred.data import DATASET1_SCHEMA, EMOJIFY_MAPPING, load_dataset_csv
from emojipred.estimator import EmojiClassifier
from emojipred.metrics import evaluate_predictions, f1_from_pr
from emojipred.model import EmojiTransformer, ModelConfig
from emojipred.numeric import RngStreams, float64_mode, grad_check
from emojipred.porter import porter_stem
from emojipred.tokenizer import NUM_SPECIAL, build_vocab, encode, encode_batch
from emojipred.training import (
    EncodedSet,
    MLMConfig,
    TrainConfig,
    export_curve,
    fit_classifier,
    load_curve,
    mask_tokens,
    mlm_recovery,
    pretrain_mlm,
    tail_nonincreasing,
)
from test_metrics import oracle
from test_porter import reference_pairs
from toy import gradcheck_setup, mlm_corpus, overfit_set, topic_records

pytestmark = pytest.mark.acceptance


def test_c01_metric_oracle_equivalence(gate):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    bad = 0
    for _ in range(1000):
        c = int(rng.integers(2, 7))
        n = int(rng.integers(1, 51))
        preds, golds = rng.integers(0, c, n).tolist(), rng.integers(0, c, n).tolist()
        rep = evaluate_predictions(preds, golds, c)
        per, acc = oracle(preds, golds, c)
        counts = rep.confusion.counts
        for k, (tp, fp, fn, p, r, f) in enumerate(per):
            s = rep.per_class[k]
            ints = counts[k, k] == tp and counts[:, k].sum() - tp == fp and counts[k].sum() - tp == fn
            ratios = max(abs(s.precision - p), abs(s.recall - r), abs(s.f1 - f)) <= 1e-12
            bad += not (ints and ratios)
        bad += abs(rep.accuracy - acc) > 1e-12
    elapsed = time.perf_counter() - t0
    gate(1, "metric engine vs counting oracle", bad == 0 and elapsed < 5, f"mismatches={bad} time={elapsed:.2f}s")


def test_c02_f1_spot_values(gate):
    a, b = f1_from_pr(0.754, 0.732), f1_from_pr(0.40, 0.60)
    rep = evaluate_predictions([0, 1, 1, 2], [0, 1, 2, 2], 3).to_dict()
    emits = "f1" in rep["macro"] and "f1" in rep["micro"] and all("f1" in c for c in rep["per_class"])
    ok = abs(a - 0.7428) <= 5e-4 and abs(b - 0.48) <= 1e-9 and emits
    gate(2, "F1 spot values", ok, f"f1(.754,.732)={a:.6f} f1(.40,.60)={b:.10f} macro/micro/per-class emitted={emits}")


def test_c03_gradient_correctness(gate):
    t0 = time.perf_counter()
    model, loss_fn = gradcheck_setup()
    params = model.parameters()
    with float64_mode():
        err = grad_check(loss_fn, params, n_coords=20)
        missed = []
        for p in params:
            e = grad_check(loss_fn, [p], n_coords=20, tamper=lambda name, g: g * 1.1)
            if not e > 5e-2:
                missed.append(p.name)
    elapsed = time.perf_counter() - t0
    ok = err < 1e-3 and not missed and elapsed < 60
    gate(3, "tiny encoder gradient check", ok, f"max_rel_err={err:.2e} tensors={len(params)} undetected={missed} time={elapsed:.1f}s")


@pytest.fixture(scope="module")
def overfit_run():
    vocab, data = overfit_set(max_len=64)
    cfg = ModelConfig(len(vocab), 4, dropout=0.0)
    model = EmojiTransformer(cfg, RngStreams(0).get("init"))
    t0 = time.perf_counter()
    curve = fit_classifier(model, data, None, TrainConfig(epochs=300, batch_size=8, lr=1e-3, seed=0, keep_best=False))
    return model, data, curve, time.perf_counter() - t0


def test_c04_overfit_sanity(gate, overfit_run):
    model, data, curve, elapsed = overfit_run
    accs = curve.column("val_accuracy")
    first = next((i + 1 for i, a in enumerate(accs) if a == 1.0), None)
    final = float((model.predict_proba(data.ids, data.mask).argmax(1) == data.labels).mean())
    ok = first is not None and final == 1.0 and elapsed < 60
    gate(4, "8-example overfit", ok, f"first_epoch_at_1.0={first} final_acc={final} time={elapsed:.1f}s")


def _dataset1_dir():
    env = os.environ.get("EMOJIPRED_DATASET1_DIR")
    return Path(env) if env else Path(__file__).parent / "data" / "dataset1"


def test_c05_dataset1_end_to_end(gate):
    root = _dataset1_dir()
    train_p, test_p = root / "train_emoji.csv", root / "tesss.csv"
    if not (train_p.is_file() and test_p.is_file()):
        gate(5, "dataset-1 end to end", False, f"dataset files not found under {root}")
    train, test = load_dataset_csv(train_p, DATASET1_SCHEMA), load_dataset_csv(test_p, DATASET1_SCHEMA)
    est = EmojiClassifier(epochs=10, pretrain_epochs=20, seed=0, mapping=EMOJIFY_MAPPING)
    est.fit([r.text for r in train], [r.label for r in train])
    golds = np.array([r.label for r in test])
    acc = float((est.predict([r.text for r in test]) == golds).mean())
    majority = int(np.bincount([r.label for r in train]).argmax())
    base = float((golds == majority).mean())
    ok = acc >= 0.45 and acc > base
    gate(5, "dataset-1 end to end", ok, f"n_train={len(train)} n_test={len(test)} acc={acc:.4f} majority={base:.4f}")


def test_c06_mlm_behaviour(gate):
    t0 = time.perf_counter()
    texts = mlm_corpus(2000)
    vocab = build_vocab(texts)
    ids, mask = encode_batch(texts, vocab, 16)
    maskable = int(((mask == 1) & (ids >= NUM_SPECIAL)).sum())
    _, rows, _, _ = mask_tokens(ids, mask, len(vocab), MLMConfig(), RngStreams(0).get("masking"))
    rate = len(rows) / maskable

    small = mlm_corpus(50)
    vocab = build_vocab(small)
    ids, mask = encode_batch(small, vocab, 16)
    model = EmojiTransformer(ModelConfig(len(vocab), 2, max_len=16), RngStreams(0).get("init"))
    pretrain_mlm(model, EncodedSet(ids, mask), TrainConfig(epochs=200, batch_size=16, lr=1e-3, seed=0))
    rec = mlm_recovery(model, EncodedSet(ids, mask), seed=1)
    chance = 1.0 / len(vocab)
    elapsed = time.perf_counter() - t0
    ok = abs(rate - 0.15) <= 0.02 and maskable >= 10000 and rec >= 10 * chance and elapsed < 300
    gate(6, "MLM masking rate and recovery", ok, f"rate={rate:.4f} over {maskable} tokens recovery={rec:.3f} 10x_chance={10 * chance:.3f} time={elapsed:.1f}s")


def test_c07_determinism_and_persistence(gate, tmp_path):
    recs = topic_records(60, seed=5)
    texts, labels = [t for t, _ in recs], [k for _, k in recs]
    kw = dict(num_layers=1, hidden_size=32, num_heads=2, ff_size=64, max_len=16, epochs=4, pretrain_epochs=2, seed=11)

    def run(out):
        est = EmojiClassifier(**kw).fit(texts, labels)
        ckpt, _ = est.artifacts_.save(out)
        return est, ckpt

    e1, c1 = run(tmp_path / "a")
    e2, c2 = run(tmp_path / "b")
    same_curves = e1.curve_.deterministic_part() == e2.curve_.deterministic_part()
    same_curves &= e1.pretrain_curve_.deterministic_part() == e2.pretrain_curve_.deterministic_part()
    same_ckpt = c1.read_bytes() == c2.read_bytes()

    buf = c1.read_bytes()
    back = from_bytes(buf)
    exact = to_bytes(back.model, back.vocab_sha256, back.extra) == buf
    exact &= all(p.data.tobytes() == q.data.tobytes() for p, q in zip(e1.artifacts_.model.parameters(), back.model.parameters()))
    reloaded = ModelArtifacts.load(c1)
    same_preds = np.array_equal(e1.predict_proba(texts), reloaded.predict_proba(texts))
    ok = same_curves and same_ckpt and exact and same_preds
    gate(7, "determinism and checkpoint round trip", ok, f"curves={same_curves} checkpoints={same_ckpt} roundtrip={exact} predictions={same_preds}")


def test_c08_padding_invariance(gate):
    rng = np.random.default_rng(8)
    words = [f"w{i}" for i in range(200)]
    vocab = build_vocab([" ".join(words)])
    model = EmojiTransformer(ModelConfig(len(vocab), 5), RngStreams(8).get("init"))
    # larger weights so logits are O(1) rather than near zero
    for p in model.parameters():
        p.data = rng.normal(0.0, 0.2, p.shape).astype(np.float32)
    worst, scale = 0.0, 0.0
    for _ in range(100):
        text = " ".join(rng.choice(words, int(rng.integers(0, 30))))
        n = encode(text, vocab, 64).true_length
        short, long = encode(text, vocab, 64), encode(text, vocab, 64)
        cut = min(64, n + int(rng.integers(0, 4)))
        a = model.logits(short.ids[:cut], short.attention_mask[:cut]).data
        b = model.logits(long.ids, long.attention_mask).data
        worst = max(worst, float(np.abs(a - b).max()))
        scale = max(scale, float(np.abs(b).max()))
    gate(8, "padding invariance", worst <= 1e-5, f"max_abs_diff={worst:.2e} max_|logit|={scale:.2f}")


def test_c09_porter_reference(gate):
    pairs = reference_pairs()
    agree = sum(porter_stem(w) == s for w, s in pairs) / len(pairs)
    named = porter_stem("caresses") == "caress" and porter_stem("running") == "run"
    gate(9, "Porter reference vocabulary", agree >= 0.99 and named, f"agreement={agree:.4%} over {len(pairs)} words")


def test_c10_curve_export(gate, overfit_run, tmp_path):
    _, _, curve, _ = overfit_run
    export_curve(curve, tmp_path / "curve.csv")
    back = load_curve(tmp_path / "curve.csv")
    train_loss, val_loss = back.column("train_loss"), back.column("val_loss")
    finite = bool(np.all(np.isfinite(train_loss)) and np.all(np.isfinite(val_loss)))
    ok = finite and len(back) == len(curve) and tail_nonincreasing(train_loss, window=5, tol=1e-3)
    gate(10, "curve export", ok, f"rows={len(back)} finite={finite} final_train_loss={train_loss[-1]:.3g}")
