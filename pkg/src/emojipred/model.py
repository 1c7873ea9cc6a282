"""Mini bidirectional transformer encoder with a pooled three-layer classifier head."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .numeric import (
    Parameter,
    Tensor,
    default_dtype,
    dropout,
    embedding,
    gelu,
    layer_norm,
    masked_mean,
    masked_softmax,
    matmul,
    no_grad,
)
from .tokenizer import TokenSequence


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    num_classes: int
    num_layers: int = 2
    hidden_size: int = 128
    num_heads: int = 4
    ff_size: int = 512
    max_len: int = 64
    dropout: float = 0.1
    pooling: str = "mean"
    layer_norm_eps: float = 1e-5

    def __post_init__(self):
        if self.hidden_size % self.num_heads:
            raise ValueError(f"hidden_size {self.hidden_size} not divisible by num_heads {self.num_heads}")
        if self.max_len < 3:
            raise ValueError("max_len must be at least 3")
        if self.num_classes < 1:
            raise ValueError("num_classes must be at least 1")
        if self.ff_size < self.hidden_size:
            raise ValueError("ff_size must be >= hidden_size")
        if self.pooling not in ("mean", "cls"):
            raise ValueError(f"pooling must be 'mean' or 'cls', got {self.pooling!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.num_layers < 1 or self.vocab_size < 5:
            raise ValueError("need num_layers >= 1 and vocab_size >= 5")

    @property
    def head_width(self) -> int:
        return math.ceil(self.hidden_size / 2)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


def parameter_count(config: ModelConfig) -> int:
    """Closed-form count of every weight in :class:`EncoderParams` plus :class:`ClassifierHead`."""
    v, h, f, t, c, h2 = (
        config.vocab_size,
        config.hidden_size,
        config.ff_size,
        config.max_len,
        config.num_classes,
        config.head_width,
    )
    embeddings = v * h + t * h + h
    per_layer = 4 * h * h + 2 * h * f + 4 * h
    head = h * h + h + h * h2 + h2 + h2 * c + c
    return embeddings + config.num_layers * per_layer + v + head


def truncated_normal(rng: np.random.Generator, shape, std: float = 0.02, dtype=None) -> np.ndarray:
    """Zero-mean Gaussian resampled until every draw lies within ±2 std."""
    z = rng.standard_normal(shape)
    bad = np.abs(z) > 2.0
    while bad.any():
        z[bad] = rng.standard_normal(int(bad.sum()))
        bad = np.abs(z) > 2.0
    return (z * std).astype(dtype or default_dtype())


class _ParamGroup:
    _order: tuple = ()

    def named_parameters(self) -> list[Parameter]:
        return [getattr(self, n) for n in self._order]


class EncoderLayer(_ParamGroup):
    _order = ("query", "key", "value", "output", "ln1_gain", "ln1_bias", "ff_in", "ff_out", "ln2_gain", "ln2_bias")

    def __init__(self, config: ModelConfig, rng: np.random.Generator, prefix: str):
        h, f = config.hidden_size, config.ff_size
        dt = default_dtype()
        for n in ("query", "key", "value", "output"):
            setattr(self, n, Parameter(truncated_normal(rng, (h, h)), f"{prefix}.attn.{n}"))
        self.ln1_gain = Parameter(np.ones(h, dtype=dt), f"{prefix}.ln1.gain")
        self.ln1_bias = Parameter(np.zeros(h, dtype=dt), f"{prefix}.ln1.bias")
        self.ff_in = Parameter(truncated_normal(rng, (h, f)), f"{prefix}.ff.in")
        self.ff_out = Parameter(truncated_normal(rng, (f, h)), f"{prefix}.ff.out")
        self.ln2_gain = Parameter(np.ones(h, dtype=dt), f"{prefix}.ln2.gain")
        self.ln2_bias = Parameter(np.zeros(h, dtype=dt), f"{prefix}.ln2.bias")


class EncoderParams(_ParamGroup):
    """Embedding tables, encoder layers, and the MLM output bias (projection tied to token embedding)."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        v, h, t = config.vocab_size, config.hidden_size, config.max_len
        self.token_embedding = Parameter(truncated_normal(rng, (v, h)), "encoder.token_embedding")
        self.position_embedding = Parameter(truncated_normal(rng, (t, h)), "encoder.position_embedding")
        self.segment_embedding = Parameter(truncated_normal(rng, (1, h)), "encoder.segment_embedding")
        self.layers = [EncoderLayer(config, rng, f"encoder.layer{i}") for i in range(config.num_layers)]
        self.mlm_bias = Parameter(np.zeros(v, dtype=default_dtype()), "encoder.mlm_bias")

    def named_parameters(self) -> list[Parameter]:
        out = [self.token_embedding, self.position_embedding, self.segment_embedding]
        for layer in self.layers:
            out.extend(layer.named_parameters())
        out.append(self.mlm_bias)
        return out


class ClassifierHead(_ParamGroup):
    """dense(H→H) → GELU → dense(H→⌈H/2⌉) → GELU → dense(⌈H/2⌉→C)."""

    _order = ("dense1_w", "dense1_b", "dense2_w", "dense2_b", "dense3_w", "dense3_b")

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        h, h2, c = config.hidden_size, config.head_width, config.num_classes
        dt = default_dtype()
        self.dense1_w = Parameter(truncated_normal(rng, (h, h)), "head.dense1.weight")
        self.dense1_b = Parameter(np.zeros(h, dtype=dt), "head.dense1.bias")
        self.dense2_w = Parameter(truncated_normal(rng, (h, h2)), "head.dense2.weight")
        self.dense2_b = Parameter(np.zeros(h2, dtype=dt), "head.dense2.bias")
        self.dense3_w = Parameter(truncated_normal(rng, (h2, c)), "head.dense3.weight")
        self.dense3_b = Parameter(np.zeros(c, dtype=dt), "head.dense3.bias")


def multi_head_attention(x: Tensor, mask, layer: EncoderLayer, num_heads: int, return_weights: bool = False):
    """Self-attention over ``x`` [B, T, H]; keys where ``mask`` [B, T] is 0 get zero weight."""
    b, t, h = x.shape
    d = h // num_heads

    def heads(w):
        return matmul(x, w).reshape(b, t, num_heads, d).transpose(0, 2, 1, 3)

    q, k, v = heads(layer.query), heads(layer.key), heads(layer.value)
    scores = matmul(q, k.transpose(0, 1, 3, 2)) * (1.0 / math.sqrt(d))
    keep = np.asarray(mask, dtype=bool)[:, None, None, :]
    weights = masked_softmax(scores, keep)
    ctx = matmul(weights, v).transpose(0, 2, 1, 3).reshape(b, t, h)
    out = matmul(ctx, layer.output)
    return (out, weights) if return_weights else out


def _as_batch(ids, mask):
    if isinstance(ids, TokenSequence):
        return ids.ids[None, :], ids.attention_mask[None, :], True
    ids = np.asarray(ids)
    mask = np.asarray(mask)
    if ids.ndim == 1:
        return ids[None, :], mask[None, :], True
    return ids, mask, False


def encoder_forward(ids, mask, params: EncoderParams, config: ModelConfig, train_mode: bool = False, rng=None):
    """Hidden states [B, T, H] (or [T, H] for a single sequence).

    Post-norm layers: ``x = LN(x + Attn(x))``, ``x = LN(x + FF(x))``.
    """
    ids, mask, single = _as_batch(ids, mask)
    b, t = ids.shape
    if t > config.max_len:
        raise ValueError(f"sequence length {t} exceeds max_len {config.max_len}")
    if ids.size and (ids.min() < 0 or ids.max() >= config.vocab_size):
        raise ValueError("token id outside the vocabulary")
    p = config.dropout
    x = embedding(params.token_embedding, ids) + params.position_embedding[:t] + params.segment_embedding
    x = dropout(x, p, rng, train_mode)
    for layer in params.layers:
        a = dropout(multi_head_attention(x, mask, layer, config.num_heads), p, rng, train_mode)
        x = layer_norm(x + a, layer.ln1_gain, layer.ln1_bias, config.layer_norm_eps)
        f = matmul(gelu(matmul(x, layer.ff_in)), layer.ff_out)
        f = dropout(f, p, rng, train_mode)
        x = layer_norm(x + f, layer.ln2_gain, layer.ln2_bias, config.layer_norm_eps)
    return x[0] if single else x


def pool(hidden: Tensor, mask, mode: str = "mean") -> Tensor:
    """[B, T, H] → [B, H] (or [T, H] → [H])."""
    mask = np.asarray(mask)
    single = hidden.ndim == 2
    if single:
        hidden = hidden.reshape((1,) + hidden.shape)
        mask = mask[None, :]
    if not np.all(mask.sum(axis=-1) > 0):
        raise ValueError("cannot pool an all-masked sequence")
    if mode == "mean":
        out = masked_mean(hidden, mask)
    elif mode == "cls":
        out = hidden[:, 0, :]
    else:
        raise ValueError(f"unknown pooling mode {mode!r}")
    return out[0] if single else out


def classify(pooled: Tensor, head: ClassifierHead, dropout_rate: float = 0.0, rng=None, train_mode: bool = False):
    """Three affine layers with GELU between them; [B, H] → [B, C] (or [H] → [C])."""
    single = pooled.ndim == 1
    x = pooled.reshape(1, -1) if single else pooled
    x = gelu(matmul(x, head.dense1_w) + head.dense1_b)
    x = dropout(x, dropout_rate, rng, train_mode)
    x = gelu(matmul(x, head.dense2_w) + head.dense2_b)
    x = dropout(x, dropout_rate, rng, train_mode)
    logits = matmul(x, head.dense3_w) + head.dense3_b
    return logits.reshape(-1) if single else logits


class EmojiTransformer:
    """Encoder parameters plus classifier head, sharing one :class:`ModelConfig`."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        self.config = config
        self.encoder = EncoderParams(config, rng)
        self.head = ClassifierHead(config, rng)

    def parameters(self) -> list[Parameter]:
        return self.encoder.named_parameters() + self.head.named_parameters()

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def hidden(self, ids, mask, train: bool = False, rng=None) -> Tensor:
        return encoder_forward(ids, mask, self.encoder, self.config, train, rng)

    def logits(self, ids, mask=None, train: bool = False, rng=None) -> Tensor:
        ids, mask, single = _as_batch(ids, mask)
        h = self.hidden(ids, mask, train, rng)
        pooled = pool(h, mask, self.config.pooling)
        out = classify(pooled, self.head, self.config.dropout, rng, train)
        return out[0] if single else out

    def mlm_logits(self, hidden: Tensor, rows, cols) -> Tensor:
        """Vocabulary logits at positions (rows[i], cols[i]) via the tied token embedding."""
        picked = hidden[rows, cols]
        return matmul(picked, self.encoder.token_embedding.transpose(1, 0)) + self.encoder.mlm_bias

    def predict_proba(self, ids, mask, batch_size: int = 256) -> np.ndarray:
        ids, mask = np.asarray(ids), np.asarray(mask)
        out = []
        with no_grad():
            for s in range(0, len(ids), batch_size):
                bi, bm = trim_batch(ids[s : s + batch_size], mask[s : s + batch_size])
                z = self.logits(bi, bm).data.astype(np.float64)
                z -= z.max(axis=1, keepdims=True)
                e = np.exp(z)
                out.append(e / e.sum(axis=1, keepdims=True))
        if not out:
            return np.zeros((0, self.config.num_classes))
        return np.concatenate(out)

    def state_dict(self) -> dict[str, np.ndarray]:
        return {p.name: p.data for p in self.parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        params = self.parameters()
        missing = {p.name for p in params} - set(state)
        if missing:
            raise KeyError(f"state is missing tensors: {sorted(missing)}")
        for p in params:
            arr = np.asarray(state[p.name])
            if arr.shape != p.shape:
                raise ValueError(f"{p.name}: shape {arr.shape} != expected {p.shape}")
            p.data = arr.astype(p.dtype, copy=True)

    def snapshot(self) -> dict[str, np.ndarray]:
        return {p.name: p.data.copy() for p in self.parameters()}


def trim_batch(ids: np.ndarray, mask: np.ndarray):
    """Drop trailing columns that are padding in every row (padding never changes the output)."""
    t = int(mask.sum(axis=1).max()) if len(mask) else 0
    t = max(t, 1)
    return ids[:, :t], mask[:, :t]
