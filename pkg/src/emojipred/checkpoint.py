"""Binary checkpoint format.

Layout::

    b"EMJB" | version byte 0x01 | header length (uint64, little-endian)
    | UTF-8 JSON header | float32 little-endian tensor data

The header holds the model config, the sha256 of the vocabulary file, and a
manifest ``[{name, shape, dtype, byte_offset, byte_len}]`` whose offsets are
relative to the start of the data section. Extra keys (label mapping, clean
config) ride along in the header.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CheckpointError
from .model import EmojiTransformer, ModelConfig

MAGIC = b"EMJB"
VERSION = 1
_PREFIX = len(MAGIC) + 1 + 8
_DTYPE = np.dtype("<f4")


@dataclass
class Checkpoint:
    model: EmojiTransformer
    vocab_sha256: str
    extra: dict = field(default_factory=dict)

    @property
    def config(self) -> ModelConfig:
        return self.model.config


def to_bytes(model: EmojiTransformer, vocab_sha256: str, extra: dict | None = None) -> bytes:
    manifest = []
    blobs = []
    offset = 0
    for p in model.parameters():
        raw = np.ascontiguousarray(p.data, dtype=_DTYPE).tobytes()
        manifest.append(
            {"name": p.name, "shape": list(p.shape), "dtype": "float32", "byte_offset": offset, "byte_len": len(raw)}
        )
        blobs.append(raw)
        offset += len(raw)
    header = {"config": model.config.to_dict(), "vocab_sha256": vocab_sha256, "tensors": manifest}
    if extra:
        header["extra"] = extra
    hbytes = json.dumps(header, sort_keys=True, ensure_ascii=False).encode("utf-8")
    return MAGIC + bytes([VERSION]) + struct.pack("<Q", len(hbytes)) + hbytes + b"".join(blobs)


def save_checkpoint(model: EmojiTransformer, vocab_sha256: str, path, extra: dict | None = None) -> None:
    """Write atomically (temp file + rename)."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(to_bytes(model, vocab_sha256, extra))
    os.replace(tmp, path)


def from_bytes(buf: bytes) -> Checkpoint:
    if len(buf) < _PREFIX:
        raise CheckpointError("truncated checkpoint: shorter than its fixed prefix")
    if buf[:4] != MAGIC:
        raise CheckpointError(f"bad magic {buf[:4]!r}, expected {MAGIC!r}")
    if buf[4] != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {buf[4]}")
    (hlen,) = struct.unpack("<Q", buf[5:_PREFIX])
    if _PREFIX + hlen > len(buf):
        raise CheckpointError("truncated checkpoint: header runs past end of file")
    try:
        header = json.loads(buf[_PREFIX : _PREFIX + hlen].decode("utf-8"))
        config = ModelConfig.from_dict(header["config"])
        manifest = header["tensors"]
        vocab_sha = header["vocab_sha256"]
    except (ValueError, KeyError, TypeError) as exc:
        raise CheckpointError(f"corrupt checkpoint header: {exc}") from exc
    data = memoryview(buf)[_PREFIX + hlen :]
    expected = 0
    state = {}
    for entry in manifest:
        off, n = entry["byte_offset"], entry["byte_len"]
        if entry.get("dtype") != "float32":
            raise CheckpointError(f"{entry['name']}: unsupported dtype {entry.get('dtype')}")
        if off != expected:
            raise CheckpointError(f"{entry['name']}: manifest offset {off} != expected {expected}")
        if n != int(np.prod(entry["shape"], dtype=np.int64)) * _DTYPE.itemsize:
            raise CheckpointError(f"{entry['name']}: byte_len {n} does not match shape {entry['shape']}")
        if off + n > len(data):
            raise CheckpointError(f"truncated checkpoint: tensor {entry['name']} runs past end of file")
        arr = np.frombuffer(data[off : off + n], dtype=_DTYPE).reshape(entry["shape"])
        state[entry["name"]] = arr.astype(np.float32)
        expected = off + n
    if expected != len(data):
        raise CheckpointError(f"checkpoint has {len(data) - expected} trailing bytes after the last tensor")

    model = EmojiTransformer(config, np.random.default_rng(0))
    try:
        model.load_state_dict(state)
    except (KeyError, ValueError) as exc:
        raise CheckpointError(str(exc)) from exc
    return Checkpoint(model=model, vocab_sha256=vocab_sha, extra=header.get("extra", {}))


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    return from_bytes(path.read_bytes())
