import csv
import io
import json
import sys

import pytest

from emojipred.cli import main
from emojipred.data import file_sha256
from emojipred.errors import NonFiniteError
from toy import topic_records, write_csv

SMALL = ["--layers", "1", "--hidden", "16", "--heads", "2", "--ff", "32", "--max-len", "16"]


@pytest.fixture
def d1(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    write_csv(tmp_path / "train.csv", topic_records(60, seed=1))
    write_csv(tmp_path / "test.csv", topic_records(20, seed=2))
    return tmp_path


def run(args, capsys):
    code = main(args)
    out, err = capsys.readouterr()
    return code, out, err


def train_args(out="run", epochs="2"):
    return ["train", "--dataset1", "train.csv", "--test", "test.csv", "--epochs", epochs, "--seed", "42", "--out", out] + SMALL


def test_train_writes_all_artifacts(d1, capsys):
    before = file_sha256(d1 / "train.csv")
    code, out, err = run(train_args(), capsys)
    assert code == 0
    for name in ("model.ckpt", "vocab.txt", "curve.csv", "metrics.json", "manifest.json"):
        assert (d1 / "run" / name).is_file()
    assert "epoch=1 train_loss=" in err and out == ""
    m = json.loads((d1 / "run" / "manifest.json").read_text())
    assert m["command"] == "train" and m["seed"] == 42 and m["config"]["epochs"] == 2
    assert m["inputs"][str("train.csv")] == before == file_sha256(d1 / "train.csv")
    assert json.loads((d1 / "run" / "metrics.json").read_text())["split_sha256"]


def test_rerun_from_manifest_is_bit_identical(d1, capsys):
    assert run(train_args(), capsys)[0] == 0
    assert run(["rerun", "run/manifest.json", "--out", "again"], capsys)[0] == 0
    for name in ("model.ckpt", "vocab.txt", "metrics.json"):
        assert (d1 / "run" / name).read_bytes() == (d1 / "again" / name).read_bytes()


def test_config_file_precedence(d1, capsys):
    (d1 / "cfg.json").write_text(json.dumps({"epochs": 3, "lr": 0.005}))
    args = ["--config", "cfg.json"] + train_args(epochs="1")
    assert run(args, capsys)[0] == 0
    cfg = json.loads((d1 / "run" / "manifest.json").read_text())["config"]
    assert cfg["epochs"] == 1 and cfg["lr"] == 0.005


def test_predict_evaluate_baseline_export(d1, capsys, monkeypatch):
    assert run(train_args(), capsys)[0] == 0
    (d1 / "tweets.txt").write_text("i love you\nfood for dinner\n")
    code, out, _ = run(["--quiet", "predict", "--checkpoint", "run/model.ckpt", "--input", "tweets.txt"], capsys)
    rows = list(csv.reader(io.StringIO(out), delimiter="\t"))
    assert code == 0 and rows[0] == ["text", "label", "emoji", "top3"] and len(rows) == 3
    assert len(rows[1][3].split()) == 3

    monkeypatch.setattr(sys, "stdin", io.StringIO(""))
    code, out, _ = run(["--quiet", "predict", "--checkpoint", "run/model.ckpt"], capsys)
    assert code == 0 and out.splitlines() == ["text\tlabel\temoji\ttop3"]

    code, out, _ = run(["--quiet", "evaluate", "--checkpoint", "run/model.ckpt", "--test", "test.csv"], capsys)
    rep = json.loads(out)
    assert code == 0 and {"accuracy", "macro", "micro", "per_class"} <= set(rep)

    code, out, _ = run(["--quiet", "baseline", "--dataset1", "train.csv", "--test", "test.csv", "--checkpoint", "run/model.ckpt"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["baseline"]["split_sha256"] == rep["transformer"]["split_sha256"]
    assert "majority_class" in rep

    code, _, _ = run(["--quiet", "export-curves", "--run", "run", "--out", "curves"], capsys)
    assert code == 0 and (d1 / "curves" / "curve.csv").read_bytes() == (d1 / "run" / "curve.csv").read_bytes()
    for cmd in ("predict", "evaluate", "baseline", "export-curves"):
        assert (d1 / f"manifest-{cmd}.json").is_file()


def test_dataset2_style_predictions_keyed_by_ids(d1, capsys):
    recs = topic_records(40, seed=3)
    write_csv(d1 / "train2.csv", recs, header=["TEXT", "Label"])
    write_csv(d1 / "test2.csv", [[t] for t, _ in topic_records(6, seed=4)], header=["TEXT"])
    write_csv(d1 / "map.csv", [[i, e] for i, e in enumerate(["😀", "🔥", "❤️", "😂", "🍕"])], header=["index", "emoji"])
    write_csv(d1 / "ids.csv", [[f"test2.csv:{i}"] for i in (5, 1, 3)], header=["id"])
    args = ["train", "--dataset2", "train2.csv", "--mapping", "map.csv", "--test", "test2.csv", "--epochs", "1", "--out", "r2"]
    assert run(args + SMALL, capsys)[0] == 0
    assert not (d1 / "r2" / "metrics.json").exists()
    code, out, _ = run(["--quiet", "predict", "--checkpoint", "r2/model.ckpt", "--test", "test2.csv", "--ids", "ids.csv"], capsys)
    rows = list(csv.reader(io.StringIO(out), delimiter="\t"))
    assert code == 0 and [r[0] for r in rows[1:]] == ["test2.csv:5", "test2.csv:1", "test2.csv:3"]
    write_csv(d1 / "ids_bad.csv", [["nope"]], header=["id"])
    assert run(["predict", "--checkpoint", "r2/model.ckpt", "--test", "test2.csv", "--ids", "ids_bad.csv"], capsys)[0] == 3


def test_preprocess_ingest_vocab(d1, capsys):
    code, out, _ = run(["--quiet", "ingest", "--dataset1", "train.csv"], capsys)
    assert code == 0 and json.loads(out)["train"]["total"] == 60
    assert run(["--quiet", "preprocess", "--dataset1", "train.csv", "--out", "clean.csv"], capsys)[0] == 0
    assert run(["--quiet", "vocab", "--dataset1", "train.csv", "--out", "v.txt"], capsys)[0] == 0
    assert (d1 / "v.txt").read_text().splitlines()[:5] == ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]


def test_pretrain_command(d1, capsys):
    args = ["--quiet", "pretrain", "--dataset1", "train.csv", "--epochs", "1", "--out", "pre"] + SMALL
    assert run(args, capsys)[0] == 0
    assert (d1 / "pre" / "pretrain_curve.csv").is_file() and (d1 / "pre" / "manifest.json").is_file()


def test_exit_codes(d1, capsys, monkeypatch):
    code, _, err = run(["train", "--dataset1", "missing.csv", "--out", "x"], capsys)
    assert code == 2 and "missing.csv" in err
    assert run(["train", "--bogus-flag"], capsys)[0] == 2
    write_csv(d1 / "bad.csv", [["text", 9]])
    assert run(["train", "--dataset1", "bad.csv", "--out", "x"], capsys)[0] == 3

    def boom(*a, **k):
        raise NonFiniteError("non-finite loss")

    monkeypatch.setattr("emojipred.estimator.fit_classifier", boom)
    code, _, err = run(train_args(), capsys)
    assert code == 4 and "non-finite" in err
