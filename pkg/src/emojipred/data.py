"""Loading and splitting the labeled tweet CSVs and the label→emoji mapping."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataValidationError
from .numeric.rng import RngStreams

logger = logging.getLogger(__name__)

# Class order of the five-class "emojify" dataset (which ships without a mapping file).
EMOJIFY_MAPPING = {0: "❤️", 1: "⚾", 2: "\U0001f604", 3: "\U0001f61e", 4: "\U0001f374"}


@dataclass(frozen=True)
class RawTweetRecord:
    text: str
    label: int
    id: str | None = None


@dataclass(frozen=True)
class CsvSchema:
    """Where to find text/label/id in a CSV.

    Columns are header names when ``has_header`` is true, zero-based positions
    otherwise. ``label_column=None`` reads an unlabeled file.
    """

    text_column: str | int = 0
    label_column: str | int | None = 1
    id_column: str | int | None = None
    has_header: bool = False
    num_classes: int | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "CsvSchema":
        known = {"text_column", "label_column", "id_column", "has_header", "num_classes"}
        unknown = set(d) - known
        if unknown:
            raise DataValidationError(f"unknown schema keys: {sorted(unknown)}")
        return cls(**d)


# Headerless (text, label) rows.
DATASET1_SCHEMA = CsvSchema(text_column=0, label_column=1, has_header=False, num_classes=5)
# Header row; names follow the Kaggle emoji-prediction files and can be overridden.
DATASET2_SCHEMA = CsvSchema(text_column="TEXT", label_column="Label", has_header=True, num_classes=20)


@dataclass
class DropReport:
    rows_read: int = 0
    rows_kept: int = 0
    reasons: Counter = field(default_factory=Counter)

    @property
    def rows_dropped(self) -> int:
        return self.rows_read - self.rows_kept

    def drop(self, reason: str) -> None:
        self.reasons[reason] += 1

    def to_dict(self) -> dict:
        return {
            "rows_read": self.rows_read,
            "rows_kept": self.rows_kept,
            "rows_dropped": self.rows_dropped,
            "reasons": dict(sorted(self.reasons.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class LabelMapping:
    entries: dict[int, str]

    def __post_init__(self):
        idx = sorted(self.entries)
        if idx != list(range(len(idx))):
            raise DataValidationError(f"gap in indices: expected 0..{len(idx) - 1}, got {idx}")
        glyphs = list(self.entries.values())
        if len(set(glyphs)) != len(glyphs):
            raise DataValidationError("duplicate emoji in mapping")

    @property
    def num_classes(self) -> int:
        return len(self.entries)

    def emoji(self, label: int) -> str:
        return self.entries[int(label)]

    def to_dict(self) -> dict[str, str]:
        return {str(k): v for k, v in sorted(self.entries.items())}

    @classmethod
    def from_dict(cls, d: dict) -> "LabelMapping":
        return cls({int(k): v for k, v in d.items()})


@dataclass
class DatasetBundle:
    train: list[RawTweetRecord]
    validation: list[RawTweetRecord]
    test: list[RawTweetRecord]
    mapping: LabelMapping

    @property
    def num_classes(self) -> int:
        return self.mapping.num_classes


def _column_index(header: list[str] | None, col, path) -> int:
    if isinstance(col, int):
        return col
    if header is None:
        raise DataValidationError(f"{path}: column {col!r} given by name but the file has no header")
    try:
        return header.index(col)
    except ValueError:
        raise DataValidationError(f"{path}: missing column {col!r} (header: {header})") from None


def read_dataset_csv(path, schema: CsvSchema = DATASET1_SCHEMA) -> tuple[list[RawTweetRecord], DropReport]:
    """Read labeled tweets, returning the kept records and a report of dropped rows."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    report = DropReport()
    records = []
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        header = None
        if schema.has_header:
            header = next(reader, None)
            if header is None:
                return records, report
            header = [h.strip() for h in header]
        ti = _column_index(header, schema.text_column, path)
        li = None if schema.label_column is None else _column_index(header, schema.label_column, path)
        ii = None if schema.id_column is None else _column_index(header, schema.id_column, path)
        for rowno, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            report.rows_read += 1
            text = row[ti].strip() if ti < len(row) else ""
            if not text:
                report.drop("empty_text")
                continue
            label = -1
            if li is not None:
                raw = row[li].strip() if li < len(row) else ""
                try:
                    label = int(float(raw)) if raw else None
                except ValueError:
                    label = None
                if label is None or label < 0:
                    report.drop("bad_label")
                    continue
                if schema.num_classes is not None and label >= schema.num_classes:
                    raise DataValidationError(
                        f"{path}: row {rowno} label {label} outside 0..{schema.num_classes - 1}"
                    )
            rid = row[ii].strip() if ii is not None and ii < len(row) else f"{path.name}:{rowno}"
            records.append(RawTweetRecord(text=text, label=label, id=rid))
            report.rows_kept += 1
    return records, report


def load_dataset_csv(path, schema: CsvSchema = DATASET1_SCHEMA) -> list[RawTweetRecord]:
    records, report = read_dataset_csv(path, schema)
    if report.rows_dropped:
        logger.info("%s: %s", path, report.to_json())
    return records


def load_mapping(path, index_column: str | int = 0, emoji_column: str | int = 1) -> LabelMapping:
    """Read an (index, emoji) CSV. A first row whose index cell is not an integer is a header."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8-sig") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    header = None
    if rows:
        first_idx = rows[0][index_column] if isinstance(index_column, int) and index_column < len(rows[0]) else None
        try:
            int(first_idx)
        except (TypeError, ValueError):
            header = [h.strip() for h in rows.pop(0)]
    ii = _column_index(header, index_column, path)
    ei = _column_index(header, emoji_column, path)
    entries: dict[int, str] = {}
    for row in rows:
        try:
            idx = int(row[ii])
        except (ValueError, IndexError):
            raise DataValidationError(f"{path}: unparsable index row {row}") from None
        if idx in entries:
            raise DataValidationError(f"{path}: duplicate index {idx}")
        entries[idx] = row[ei].strip()
    return LabelMapping(entries)


def load_ids(path, column: str | int = "id") -> list[str]:
    """Read the id column of a submission/output file (used only to order predictions)."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        ci = _column_index(header, column, path)
        return [row[ci].strip() for row in reader if row]


def split_train_val(records, val_fraction: float = 0.1, seed: int = 0):
    """Deterministic stratified split.

    Each class sends ``floor(count * val_fraction)`` of its records to
    validation. If that leaves validation empty, ``max(1, round(n * f))``
    records are drawn without stratification instead. Both outputs keep the
    input order.
    """
    n = len(records)
    if n < 2:
        raise ValueError("split_train_val needs at least 2 records")
    if not 0.0 < val_fraction < 1.0:
        raise ValueError(f"degenerate val_fraction {val_fraction}")
    rng = RngStreams(seed).get("split")
    by_class: dict[int, list[int]] = {}
    for i, r in enumerate(records):
        by_class.setdefault(r.label, []).append(i)
    chosen: list[int] = []
    for label in sorted(by_class):
        idx = by_class[label]
        k = int(np.floor(len(idx) * val_fraction))
        if k:
            chosen.extend(rng.permutation(idx)[:k].tolist())
    if not chosen:
        k = max(1, int(round(n * val_fraction)))
        chosen = rng.permutation(n)[:k].tolist()
    if len(chosen) >= n:
        raise ValueError(f"val_fraction {val_fraction} leaves no training records")
    val_set = set(chosen)
    train = [r for i, r in enumerate(records) if i not in val_set]
    val = [r for i, r in enumerate(records) if i in val_set]
    return train, val


def stratified_subsample(records, size: int, seed: int = 0):
    """Proportional per-class subsample of at most ``size`` records, input order kept."""
    if size >= len(records):
        return list(records)
    rng = RngStreams(seed).get("subsample")
    by_class: dict[int, list[int]] = {}
    for i, r in enumerate(records):
        by_class.setdefault(r.label, []).append(i)
    frac = size / len(records)
    keep = []
    for label in sorted(by_class):
        idx = by_class[label]
        k = max(1, int(round(len(idx) * frac)))
        keep.extend(rng.permutation(idx)[:k].tolist())
    return [records[i] for i in sorted(keep)]


def dataset_stats(records) -> dict:
    hist = Counter(r.label for r in records)
    return {"histogram": dict(sorted(hist.items())), "total": len(records)}


def assemble_bundle(train_records, test_records, mapping: LabelMapping, val_fraction: float = 0.1, seed: int = 0):
    """Carve validation from train and check ids are disjoint and labels mapped."""
    for split, recs in (("train", train_records), ("test", test_records)):
        bad = sorted({r.label for r in recs if r.label >= 0 and r.label not in mapping.entries})
        if bad:
            raise DataValidationError(f"{split} labels {bad} missing from mapping")
    train, val = split_train_val(train_records, val_fraction, seed)
    ids = [{r.id for r in s} for s in (train, val, test_records)]
    if ids[0] & ids[1] or ids[0] & ids[2] or ids[1] & ids[2]:
        raise DataValidationError("train/validation/test share record ids")
    return DatasetBundle(train=train, validation=val, test=list(test_records), mapping=mapping)


def records_digest(records) -> str:
    """sha256 over (id, text, label) triples; identifies a split byte-for-byte."""
    h = hashlib.sha256()
    for r in records:
        h.update(json.dumps([r.id, r.text, r.label], ensure_ascii=False).encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
