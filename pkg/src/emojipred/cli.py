"""Command-line entry point.

Exit codes: 0 success, 2 usage/input error, 3 data-validation error,
4 numeric failure. Progress goes to stderr; stdout carries machine-readable
output (predict, evaluate, ingest).
"""

from __future__ import annotations

import csv
import json
import logging
import os
import shutil
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__
from .artifacts import ModelArtifacts
from .baseline import eval_baseline, featurize, train_logreg
from .data import (
    DATASET1_SCHEMA,
    DATASET2_SCHEMA,
    EMOJIFY_MAPPING,
    CsvSchema,
    LabelMapping,
    assemble_bundle,
    dataset_stats,
    file_sha256,
    load_ids,
    load_mapping,
    read_dataset_csv,
    records_digest,
    stratified_subsample,
)
from .errors import CheckpointError, DataValidationError, NonFiniteError
from .estimator import EmojiClassifier
from .preprocess import CleanConfig, preprocess_corpus, preprocess_text
from .tokenizer import build_vocab
from .training import export_curve, evaluate, load_curve

logger = logging.getLogger("emojipred")

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4

# Per-dataset defaults; explicit flags and config-file values override them.
DATASET_DEFAULTS = {
    "dataset1": {"epochs": 10, "batch_size": 16, "min_freq": 1, "subsample": None},
    "dataset2": {"epochs": 50, "batch_size": 64, "min_freq": 2, "subsample": 5000},
}


# ---------------------------------------------------------------------------
# manifests


def _hash_inputs(paths) -> dict:
    return {str(p): file_sha256(p) for p in paths if p and Path(p).is_file()}


def write_manifest(path, command: str, params: dict, inputs, artifacts: dict, started: float) -> Path:
    """Write a run manifest atomically; enough to re-run the command exactly."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "config": {k: v for k, v in params.items() if k != "manifest"},
        "seed": params.get("seed"),
        "inputs": _hash_inputs(inputs),
        "artifacts": {
            k: {"path": str(v), "sha256": file_sha256(v) if Path(v).is_file() else None} for k, v in artifacts.items()
        },
        "tool_version": __version__,
        "wall_seconds": round(time.time() - started, 3),
    }
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False), encoding="utf-8")
    os.replace(tmp, path)
    return path


def _manifest_path(params: dict, command: str, out_dir=None) -> Path:
    if params.get("manifest"):
        return Path(params["manifest"])
    if out_dir is not None:
        return Path(out_dir) / "manifest.json"
    return Path(f"manifest-{command}.json")


# ---------------------------------------------------------------------------
# shared option groups


def clean_options(f):
    for name, default, text in reversed(
        [
            ("lowercase", True, "lowercase text"),
            ("strip-punctuation", True, "remove punctuation and symbols"),
            ("keep-hashtags", True, "keep #hashtag tokens"),
            ("keep-mentions", True, "keep @mention tokens"),
            ("stemming", True, "Porter-stem ASCII words"),
            ("collapse-whitespace", True, "collapse runs of whitespace"),
        ]
    ):
        f = click.option(f"--{name}/--no-{name}", default=default, show_default=True, help=text)(f)
    return f


def _clean_config(params) -> CleanConfig:
    return CleanConfig(
        lowercase=params["lowercase"],
        strip_punctuation=params["strip_punctuation"],
        keep_hashtags=params["keep_hashtags"],
        keep_mentions=params["keep_mentions"],
        enable_stemming=params["stemming"],
        collapse_whitespace=params["collapse_whitespace"],
    )


def data_options(f):
    f = click.option("--schema", type=click.Path(dir_okay=False), help="JSON file with CSV column settings.")(f)
    f = click.option("--mapping", type=click.Path(dir_okay=False), help="CSV of (index, emoji).")(f)
    f = click.option("--dataset2", type=click.Path(dir_okay=False), help="Headered train CSV (20-class style).")(f)
    f = click.option("--dataset1", type=click.Path(dir_okay=False), help="Headerless (text,label) train CSV.")(f)
    return f


def _require_file(path, what: str = "file"):
    if path is not None and not Path(path).is_file():
        raise click.BadParameter(f"{what} not found: {path}")


def _resolve_dataset(params):
    """(kind, train path, schema, mapping) from the --dataset1/--dataset2 flags."""
    d1, d2 = params.get("dataset1"), params.get("dataset2")
    if bool(d1) == bool(d2):
        raise click.UsageError("give exactly one of --dataset1 or --dataset2")
    kind, train_path = ("dataset1", d1) if d1 else ("dataset2", d2)
    _require_file(train_path, "train file")
    schema = DATASET1_SCHEMA if kind == "dataset1" else DATASET2_SCHEMA
    if params.get("schema"):
        _require_file(params["schema"], "schema file")
        overrides = json.loads(Path(params["schema"]).read_text(encoding="utf-8"))
        schema = CsvSchema.from_dict({**schema.__dict__, **overrides})
    if params.get("mapping"):
        _require_file(params["mapping"], "mapping file")
        mapping = load_mapping(params["mapping"])
    elif kind == "dataset1":
        mapping = LabelMapping(EMOJIFY_MAPPING)
    else:
        raise click.UsageError("--dataset2 needs --mapping")
    if schema.num_classes is not None and schema.num_classes != mapping.num_classes:
        schema = CsvSchema(**{**schema.__dict__, "num_classes": mapping.num_classes})
    return kind, train_path, schema, mapping


def _read(path, schema):
    records, report = read_dataset_csv(path, schema)
    logger.info("%s: %s", path, report.to_json())
    return records, report


def _read_test(path, schema):
    """Labeled if the label column is present; otherwise an unlabeled file (labels = -1)."""
    _require_file(path, "test file")
    try:
        return _read(path, schema)[0], True
    except DataValidationError as exc:
        if schema.has_header and schema.label_column is not None and "missing column" in str(exc):
            unlabeled = CsvSchema(**{**schema.__dict__, "label_column": None})
            return _read(path, unlabeled)[0], False
        raise


def _pick(params, key, kind):
    return params[key] if params.get(key) is not None else DATASET_DEFAULTS[kind][key]


# ---------------------------------------------------------------------------
# the group


def _load_config(ctx, _param, value):
    if value:
        try:
            cfg = json.loads(Path(value).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise click.BadParameter(f"cannot read config {value}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise click.BadParameter("config file must hold a JSON object")
        ctx.default_map = {name: cfg for name in cli.commands}
    return value


@click.group()
@click.version_option(__version__)
@click.option(
    "--config",
    type=click.Path(dir_okay=False),
    callback=_load_config,
    is_eager=True,
    expose_value=False,
    help="JSON file of option defaults (flags still win).",
)
@click.option("--quiet", is_flag=True, help="Suppress progress lines on stderr.")
def cli(quiet):
    """Emoji prediction for tweets with a mini transformer encoder."""
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING if quiet else logging.INFO, format="%(message)s", force=True)


@cli.command()
@data_options
@click.option("--test", type=click.Path(dir_okay=False))
@click.option("--manifest", type=click.Path(dir_okay=False))
def ingest(**params):
    """Load and validate the CSVs; print class statistics and drop reports as JSON."""
    started = time.time()
    kind, train_path, schema, mapping = _resolve_dataset(params)
    train, report = _read(train_path, schema)
    out = {"train": {**dataset_stats(train), "drop_report": report.to_dict()}, "num_classes": mapping.num_classes}
    if params["test"]:
        test, labeled = _read_test(params["test"], schema)
        out["test"] = {**dataset_stats(test), "labeled": labeled}
    click.echo(json.dumps(out, indent=2, sort_keys=True))
    write_manifest(_manifest_path(params, "ingest"), "ingest", params, [train_path, params["test"]], {}, started)


@cli.command()
@data_options
@clean_options
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Cleaned CSV (id,text,label).")
@click.option("--manifest", type=click.Path(dir_okay=False))
def preprocess(**params):
    """Clean (and stem) a train file."""
    started = time.time()
    _, train_path, schema, _ = _resolve_dataset(params)
    records = preprocess_corpus(_read(train_path, schema)[0], _clean_config(params))
    with open(params["out"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "text", "label"])
        for r in records:
            w.writerow([r.id, r.text, r.label])
    write_manifest(
        _manifest_path(params, "preprocess"), "preprocess", params, [train_path], {"cleaned": params["out"]}, started
    )


@cli.command()
@data_options
@clean_options
@click.option("--min-freq", type=int, default=1, show_default=True)
@click.option("--max-size", type=int, default=20000, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--manifest", type=click.Path(dir_okay=False))
def vocab(**params):
    """Build a vocabulary file (one token per line) from a train file."""
    started = time.time()
    _, train_path, schema, _ = _resolve_dataset(params)
    records = preprocess_corpus(_read(train_path, schema)[0], _clean_config(params))
    v = build_vocab([r.text for r in records], params["min_freq"], params["max_size"])
    v.save(params["out"])
    logger.info("vocabulary: %d tokens", len(v))
    write_manifest(_manifest_path(params, "vocab"), "vocab", params, [train_path], {"vocab": params["out"]}, started)


def model_options(f):
    opts = [
        click.option("--layers", "num_layers", type=int, default=2, show_default=True),
        click.option("--hidden", "hidden_size", type=int, default=128, show_default=True),
        click.option("--heads", "num_heads", type=int, default=4, show_default=True),
        click.option("--ff", "ff_size", type=int, default=512, show_default=True),
        click.option("--max-len", type=int, default=64, show_default=True),
        click.option("--dropout", type=float, default=0.1, show_default=True),
        click.option("--pooling", type=click.Choice(["mean", "cls"]), default="mean", show_default=True),
        click.option("--epochs", type=int, default=None, help="Default: 10 (dataset1) / 50 (dataset2)."),
        click.option("--batch-size", type=int, default=None, help="Default: 16 (dataset1) / 64 (dataset2)."),
        click.option("--lr", type=float, default=1e-3, show_default=True),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--val-fraction", type=float, default=0.1, show_default=True),
        click.option("--min-freq", type=int, default=None, help="Default: 1 (dataset1) / 2 (dataset2)."),
        click.option("--max-vocab", type=int, default=20000, show_default=True),
        click.option("--mask-prob", type=float, default=0.15, show_default=True),
        click.option("--early-stop", "early_stop_patience", type=int, default=None),
        click.option("--clip-norm", type=float, default=None),
        click.option("--subsample", type=int, default=None, help="Stratified train subsample size (dataset2: 5000)."),
        click.option("--full-data", is_flag=True, help="Train on every row (disables the dataset2 subsample)."),
    ]
    for o in reversed(opts):
        f = o(f)
    return f


def _estimator(params, kind, mapping, pretrain_epochs: int) -> EmojiClassifier:
    clean = _clean_config(params)
    return EmojiClassifier(
        num_layers=params["num_layers"],
        hidden_size=params["hidden_size"],
        num_heads=params["num_heads"],
        ff_size=params["ff_size"],
        max_len=params["max_len"],
        dropout=params["dropout"],
        pooling=params["pooling"],
        epochs=_pick(params, "epochs", kind),
        batch_size=_pick(params, "batch_size", kind),
        lr=params["lr"],
        seed=params["seed"],
        early_stop_patience=params["early_stop_patience"],
        clip_norm=params["clip_norm"],
        pretrain_epochs=pretrain_epochs,
        mask_prob=params["mask_prob"],
        min_freq=_pick(params, "min_freq", kind),
        max_vocab=params["max_vocab"],
        val_fraction=params["val_fraction"],
        mapping=dict(mapping.entries),
        **{k if k != "enable_stemming" else k: v for k, v in clean.to_dict().items()},
    )


def _training_records(params, kind, train_path, schema):
    train, _ = _read(train_path, schema)
    size = None if params["full_data"] else _pick(params, "subsample", kind)
    if size is not None and size < len(train):
        train = stratified_subsample(train, size, params["seed"])
        logger.info("training on a stratified subsample of %d records", len(train))
    return train


@cli.command()
@data_options
@clean_options
@model_options
@click.option("--test", type=click.Path(dir_okay=False), help="Test CSV (same schema).")
@click.option("--pretrain-epochs", type=int, default=0, show_default=True, help="MLM epochs before fine-tuning.")
@click.option("--out", default="run", show_default=True, type=click.Path(file_okay=False))
@click.option("--manifest", type=click.Path(dir_okay=False))
def train(**params):
    """Preprocess, build vocabulary, (pre)train, fine-tune and evaluate; write all artifacts."""
    started = time.time()
    kind, train_path, schema, mapping = _resolve_dataset(params)
    records = _training_records(params, kind, train_path, schema)
    test, labeled = ([], False)
    if params["test"]:
        test, labeled = _read_test(params["test"], schema)
    bundle = assemble_bundle(records, [r for r in test if r.label >= 0], mapping, params["val_fraction"], params["seed"])

    est = _estimator(params, kind, mapping, params["pretrain_epochs"])
    est.fit(
        [r.text for r in bundle.train],
        [r.label for r in bundle.train],
        X_val=[r.text for r in bundle.validation],
        y_val=[r.label for r in bundle.validation],
    )
    out = Path(params["out"])
    out.mkdir(parents=True, exist_ok=True)
    ckpt, vocab_path = est.artifacts_.save(out)
    artifacts = {"checkpoint": ckpt, "vocab": vocab_path, "curve": out / "curve.csv"}
    export_curve(est.curve_, out / "curve.csv")
    if est.pretrain_curve_ is not None:
        export_curve(est.pretrain_curve_, out / "pretrain_curve.csv")
        artifacts["pretrain_curve"] = out / "pretrain_curve.csv"
    if labeled and bundle.test:
        rep = evaluate(est.artifacts_, bundle.test)
        rep.header = {"split_sha256": records_digest(bundle.test), "epochs": len(est.curve_)}
        (out / "metrics.json").write_text(rep.to_json(mapping), encoding="utf-8")
        artifacts["metrics"] = out / "metrics.json"
        logger.info("test accuracy=%.4f macro_f1=%.4f", rep.accuracy, rep.macro["f1"])
    write_manifest(
        _manifest_path(params, "train", out),
        "train",
        params,
        [train_path, params["test"], params["mapping"], params["schema"]],
        artifacts,
        started,
    )


@cli.command()
@data_options
@clean_options
@model_options
@click.option("--out", default="pretrain-run", show_default=True, type=click.Path(file_okay=False))
@click.option("--manifest", type=click.Path(dir_okay=False))
def pretrain(**params):
    """Masked-LM pretraining only; writes checkpoint, vocabulary and the MLM curve."""
    from .model import EmojiTransformer, ModelConfig
    from .numeric import RngStreams
    from .tokenizer import encode_batch
    from .training import EncodedSet, MLMConfig, TrainConfig, pretrain_mlm

    started = time.time()
    kind, train_path, schema, mapping = _resolve_dataset(params)
    clean = _clean_config(params)
    records = preprocess_corpus(_training_records(params, kind, train_path, schema), clean)
    v = build_vocab([r.text for r in records], _pick(params, "min_freq", kind), params["max_vocab"])
    config = ModelConfig(
        vocab_size=len(v),
        num_classes=mapping.num_classes,
        num_layers=params["num_layers"],
        hidden_size=params["hidden_size"],
        num_heads=params["num_heads"],
        ff_size=params["ff_size"],
        max_len=params["max_len"],
        dropout=params["dropout"],
        pooling=params["pooling"],
    )
    model = EmojiTransformer(config, RngStreams(params["seed"]).get("init"))
    ids, mask = encode_batch([r.text for r in records], v, config.max_len)
    cfg = TrainConfig(
        epochs=_pick(params, "epochs", kind),
        batch_size=_pick(params, "batch_size", kind),
        lr=params["lr"],
        seed=params["seed"],
        mlm=MLMConfig(mask_prob=params["mask_prob"]),
    )
    curve = pretrain_mlm(model, EncodedSet(ids, mask), cfg)
    out = Path(params["out"])
    ckpt, vocab_path = ModelArtifacts(model, v, mapping, clean).save(out)
    export_curve(curve, out / "pretrain_curve.csv")
    write_manifest(
        _manifest_path(params, "pretrain", out),
        "pretrain",
        params,
        [train_path, params["mapping"], params["schema"]],
        {"checkpoint": ckpt, "vocab": vocab_path, "pretrain_curve": out / "pretrain_curve.csv"},
        started,
    )


def _load_artifacts(params) -> ModelArtifacts:
    _require_file(params["checkpoint"], "checkpoint")
    mapping = load_mapping(params["mapping"]) if params.get("mapping") else None
    return ModelArtifacts.load(params["checkpoint"], params.get("vocab"), mapping)


@cli.command(name="evaluate")
@click.option("--checkpoint", required=True, type=click.Path(dir_okay=False))
@click.option("--vocab", type=click.Path(dir_okay=False), help="Default: vocab.txt next to the checkpoint.")
@click.option("--test", required=True, type=click.Path(dir_okay=False))
@click.option("--schema", type=click.Path(dir_okay=False))
@click.option("--mapping", type=click.Path(dir_okay=False))
@click.option("--headered", is_flag=True, help="Test file uses the headered (dataset2) layout.")
@click.option("--out", type=click.Path(dir_okay=False), help="Metrics JSON path (default: stdout).")
@click.option("--manifest", type=click.Path(dir_okay=False))
def evaluate_cmd(**params):
    """Score a checkpoint on a labeled test CSV; prints metrics JSON."""
    started = time.time()
    art = _load_artifacts(params)
    schema = DATASET2_SCHEMA if params["headered"] else DATASET1_SCHEMA
    if params["schema"]:
        schema = CsvSchema.from_dict({**schema.__dict__, **json.loads(Path(params["schema"]).read_text())})
    schema = CsvSchema(**{**schema.__dict__, "num_classes": art.mapping.num_classes})
    test, labeled = _read_test(params["test"], schema)
    if not labeled:
        raise DataValidationError(f"{params['test']} has no label column to evaluate against")
    rep = evaluate(art, test)
    rep.header = {"split_sha256": records_digest(test)}
    text = rep.to_json(art.mapping)
    if params["out"]:
        Path(params["out"]).write_text(text, encoding="utf-8")
    else:
        click.echo(text)
    write_manifest(
        _manifest_path(params, "evaluate"),
        "evaluate",
        params,
        [params["checkpoint"], params["test"]],
        {"metrics": params["out"]} if params["out"] else {},
        started,
    )


def _top3(probs, mapping) -> str:
    order = np.argsort(-probs, kind="stable")[:3]
    return " ".join(f"{mapping.emoji(k)}:{probs[k]:.4f}" for k in order)


@cli.command()
@click.option("--checkpoint", required=True, type=click.Path(dir_okay=False))
@click.option("--vocab", type=click.Path(dir_okay=False))
@click.option("--mapping", type=click.Path(dir_okay=False))
@click.option("--input", "input_path", type=click.Path(dir_okay=False), help="One tweet per line (default: stdin).")
@click.option("--test", type=click.Path(dir_okay=False), help="CSV of tweets instead of --input.")
@click.option("--schema", type=click.Path(dir_okay=False), help="Column settings for --test.")
@click.option("--ids", "ids_path", type=click.Path(dir_okay=False), help="File whose 'id' column orders the output.")
@click.option("--out", type=click.Path(dir_okay=False), help="TSV path (default: stdout).")
@click.option("--manifest", type=click.Path(dir_okay=False))
def predict(**params):
    """Predict emojis; writes TSV rows of text, label, emoji and top-3 probabilities."""
    started = time.time()
    art = _load_artifacts(params)
    ids = None
    if params["test"]:
        schema = DATASET2_SCHEMA
        if params["schema"]:
            schema = CsvSchema.from_dict({**schema.__dict__, **json.loads(Path(params["schema"]).read_text())})
        schema = CsvSchema(**{**schema.__dict__, "label_column": None, "num_classes": None})
        records, _ = _read_test(params["test"], schema)
        texts = [r.text for r in records]
        ids = [r.id for r in records]
    else:
        if params["input_path"]:
            _require_file(params["input_path"], "input file")
            raw = Path(params["input_path"]).read_text(encoding="utf-8")
        else:
            raw = sys.stdin.read()
        texts = [line for line in raw.splitlines() if line.strip()]
    if params["ids_path"]:
        order = load_ids(params["ids_path"])
        if ids is None:
            if len(order) != len(texts):
                raise DataValidationError(f"{len(order)} ids for {len(texts)} input lines")
            ids = order
        else:
            pos = {rid: i for i, rid in enumerate(ids)}
            missing = [rid for rid in order if rid not in pos]
            if missing:
                raise DataValidationError(f"{len(missing)} ids (e.g. {missing[0]!r}) not found in {params['test']}")
            texts = [texts[pos[rid]] for rid in order]
            ids = order

    probs = art.predict_proba(texts) if texts else np.zeros((0, art.mapping.num_classes))
    sink = open(params["out"], "w", newline="", encoding="utf-8") if params["out"] else sys.stdout
    try:
        w = csv.writer(sink, delimiter="\t", lineterminator="\n")
        header = ["text", "label", "emoji", "top3"]
        w.writerow(["id"] + header if ids is not None else header)
        for i, (text, p) in enumerate(zip(texts, probs)):
            k = int(p.argmax())
            row = [text, k, art.mapping.emoji(k), _top3(p, art.mapping)]
            w.writerow([ids[i]] + row if ids is not None else row)
    finally:
        if sink is not sys.stdout:
            sink.close()
    write_manifest(
        _manifest_path(params, "predict"),
        "predict",
        params,
        [params["checkpoint"], params["input_path"], params["test"], params["ids_path"]],
        {"predictions": params["out"]} if params["out"] else {},
        started,
    )


@cli.command()
@data_options
@clean_options
@click.option("--test", required=True, type=click.Path(dir_okay=False))
@click.option("--checkpoint", type=click.Path(dir_okay=False), help="Transformer run to compare against.")
@click.option("--binary", is_flag=True, help="Presence features instead of counts.")
@click.option("--epochs", type=int, default=300, show_default=True)
@click.option("--lr", type=float, default=0.01, show_default=True)
@click.option("--l2", type=float, default=1e-4, show_default=True)
@click.option("--min-freq", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), help="Report JSON path (default: stdout).")
@click.option("--manifest", type=click.Path(dir_okay=False))
def baseline(**params):
    """Bag-of-words logistic regression, reported next to the majority class (and a transformer run)."""
    started = time.time()
    _, train_path, schema, mapping = _resolve_dataset(params)
    clean = _clean_config(params)
    train_recs = preprocess_corpus(_read(train_path, schema)[0], clean)
    test_raw, labeled = _read_test(params["test"], schema)
    if not labeled:
        raise DataValidationError(f"{params['test']} has no labels")
    art = _load_artifacts({**params, "vocab": None, "mapping": params["mapping"]}) if params["checkpoint"] else None
    v = art.vocab if art else build_vocab([r.text for r in train_recs], params["min_freq"])
    feats = featurize(train_recs, v, params["binary"])
    fit = train_logreg(feats, mapping.num_classes, params["epochs"], params["lr"], params["l2"], params["seed"])
    test_clean = [type(r)(preprocess_text(r.text, clean), r.label, r.id) for r in test_raw]
    majority = int(np.bincount(feats.labels, minlength=mapping.num_classes).argmax())
    rep = eval_baseline(fit.weights, fit.bias, test_clean, v, params["binary"], majority)
    rep.header["split_sha256"] = records_digest(test_raw)
    out = {"split_sha256": records_digest(test_raw), "majority_class": rep.header["majority_class"]}
    out["baseline"] = rep.to_dict(mapping)
    if art is not None:
        trep = evaluate(art, test_raw)
        trep.header = {"split_sha256": records_digest(test_raw)}
        out["transformer"] = trep.to_dict(mapping)
    text = json.dumps(out, indent=2, ensure_ascii=False)
    if params["out"]:
        Path(params["out"]).write_text(text, encoding="utf-8")
    else:
        click.echo(text)
    write_manifest(
        _manifest_path(params, "baseline"),
        "baseline",
        params,
        [train_path, params["test"], params["checkpoint"]],
        {"report": params["out"]} if params["out"] else {},
        started,
    )


@cli.command(name="export-curves")
@click.option("--run", "run_dir", required=True, type=click.Path(file_okay=False))
@click.option("--out", type=click.Path(file_okay=False), help="Directory to copy validated curves into.")
@click.option("--manifest", type=click.Path(dir_okay=False))
def export_curves(**params):
    """Validate a run's curve CSVs (and optionally copy them)."""
    started = time.time()
    run = Path(params["run_dir"])
    found = [p for p in (run / "curve.csv", run / "pretrain_curve.csv") if p.is_file()]
    if not found:
        raise click.BadParameter(f"no curve CSV found in {run}")
    artifacts = {}
    for p in found:
        curve = load_curve(p)
        logger.info("%s: %d epochs, final train_loss=%.6f", p, len(curve), curve.rows[-1].train_loss)
        if params["out"]:
            Path(params["out"]).mkdir(parents=True, exist_ok=True)
            dest = Path(params["out"]) / p.name
            shutil.copyfile(p, dest)
            artifacts[p.stem] = dest
    write_manifest(_manifest_path(params, "export-curves"), "export-curves", params, found, artifacts, started)


@cli.command()
@click.argument("manifest_path", type=click.Path(dir_okay=False))
@click.option("--out", type=click.Path(), help="Override the output location of the original run.")
@click.option("--allow-changed-inputs", is_flag=True)
def rerun(manifest_path, out, allow_changed_inputs):
    """Re-execute a command from its manifest."""
    _require_file(manifest_path, "manifest")
    m = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
    for path, digest in m["inputs"].items():
        if not Path(path).is_file():
            raise click.BadParameter(f"input {path} from the manifest no longer exists")
        if file_sha256(path) != digest and not allow_changed_inputs:
            raise DataValidationError(f"input {path} changed since the manifest was written")
    params = dict(m["config"])
    if out is not None:
        params["out"] = out
    cmd = cli.commands[m["command"]]
    ctx = click.get_current_context()
    ctx.invoke(cmd, **params)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="emojipred", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except FileNotFoundError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_USAGE
    except (DataValidationError, CheckpointError) as exc:
        click.echo(f"data error: {exc}", err=True)
        return EXIT_DATA
    except NonFiniteError as exc:
        click.echo(f"numeric failure: {exc}", err=True)
        return EXIT_NUMERIC
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
