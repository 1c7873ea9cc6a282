"""Differentiable layer primitives used by the encoder and the baseline."""

from __future__ import annotations

import math

import numpy as np

from .tensor import Tensor, _wrap, unbroadcast

_GELU_C = math.sqrt(2.0 / math.pi)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product with numpy batching rules (both operands at least 2-D)."""
    a, b = _wrap(a), _wrap(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ValueError(f"matmul needs operands with ndim >= 2, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ValueError(f"matmul shape mismatch: {a.shape} @ {b.shape}")

    def bw(g):
        if a.requires_grad:
            a._accumulate(unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.shape))
        if b.requires_grad:
            b._accumulate(unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.shape))

    return Tensor.from_op(a.data @ b.data, (a, b), bw, "matmul")


def masked_softmax(x: Tensor, keep=None) -> Tensor:
    """Softmax over the last axis; positions where ``keep`` is False get exactly 0.

    ``keep`` is a boolean array broadcastable to ``x``. Masked logits are
    replaced by -inf before the max subtraction, so every row needs at least
    one kept position.
    """
    x = _wrap(x)
    z = x.data
    if keep is not None:
        keep = np.asarray(keep, dtype=bool)
        if not np.all(keep.any(axis=-1)):
            raise ValueError("softmax row with every position masked")
        z = np.where(keep, z, -np.inf)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=-1, keepdims=True)

    def bw(g):
        x._accumulate(p * (g - (g * p).sum(axis=-1, keepdims=True)))

    return Tensor.from_op(p, (x,), bw, "softmax")


def softmax_rows(x: Tensor) -> Tensor:
    return masked_softmax(x)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then scale and shift."""
    x, gain, bias = _wrap(x), _wrap(gain), _wrap(bias)
    n = x.shape[-1]
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = xhat * gain.data + bias.data

    def bw(g):
        if gain.requires_grad:
            gain._accumulate(unbroadcast(g * xhat, gain.shape))
        if bias.requires_grad:
            bias._accumulate(unbroadcast(g, bias.shape))
        if x.requires_grad:
            dxhat = g * gain.data
            s1 = dxhat.sum(axis=-1, keepdims=True)
            s2 = (dxhat * xhat).sum(axis=-1, keepdims=True)
            x._accumulate(inv / n * (n * dxhat - s1 - xhat * s2))

    return Tensor.from_op(out, (x, gain, bias), bw, "layer_norm")


def gelu(x: Tensor) -> Tensor:
    """GELU, tanh approximation."""
    x = _wrap(x)
    d = x.data
    inner = _GELU_C * (d + 0.044715 * d**3)
    t = np.tanh(inner)
    out = 0.5 * d * (1.0 + t)

    def bw(g):
        dinner = _GELU_C * (1.0 + 3 * 0.044715 * d * d)
        x._accumulate(g * (0.5 * (1.0 + t) + 0.5 * d * (1.0 - t * t) * dinner))

    return Tensor.from_op(out, (x,), bw, "gelu")


def cross_entropy(logits: Tensor, labels) -> Tensor:
    """Mean negative log-likelihood of ``labels`` under ``softmax(logits)``.

    logits: [B, C]; labels: integer array [B].
    """
    logits = _wrap(logits)
    labels = np.asarray(labels)
    if logits.ndim != 2:
        raise ValueError(f"cross_entropy expects [B, C] logits, got {logits.shape}")
    b, c = logits.shape
    if labels.shape != (b,):
        raise ValueError(f"labels shape {labels.shape} does not match batch size {b}")
    if b == 0:
        raise ValueError("cross_entropy over an empty batch")
    if labels.dtype.kind not in "iu" or labels.min() < 0 or labels.max() >= c:
        raise ValueError(f"label out of range 0..{c - 1}")
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1))
    rows = np.arange(b)
    loss = (lse - z[rows, labels]).mean()

    def bw(g):
        p = np.exp(z - lse[:, None])
        p[rows, labels] -= 1.0
        logits._accumulate(p * (g / b))

    return Tensor.from_op(np.asarray(loss, dtype=logits.dtype), (logits,), bw, "cross_entropy")


def embedding(weight: Tensor, ids) -> Tensor:
    """Row lookup ``weight[ids]``; gradients scatter-add back into the table."""
    ids = np.asarray(ids)

    def bw(g):
        full = np.zeros(weight.shape, dtype=g.dtype)
        np.add.at(full, ids, g)
        weight._accumulate(full)

    return Tensor.from_op(weight.data[ids], (weight,), bw, "embedding")


def dropout(x: Tensor, rate: float, rng: np.random.Generator | None, train: bool) -> Tensor:
    """Inverted dropout; identity when not training or ``rate == 0``."""
    if not train or rate <= 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in training mode needs a random generator")
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)
    return x * Tensor(keep, dtype=x.dtype)


def masked_mean(x: Tensor, mask) -> Tensor:
    """Mean over axis -2 of ``x`` [B, T, H] restricted to rows where ``mask`` [B, T] is 1."""
    mask = np.asarray(mask, dtype=x.dtype)
    counts = mask.sum(axis=-1, keepdims=True)
    if np.any(counts == 0):
        raise ValueError("mean pooling over an all-masked sequence")
    weights = (mask / counts)[..., None, :]
    out = matmul(Tensor(weights, dtype=x.dtype), x)
    return out.reshape(out.shape[:-2] + (out.shape[-1],))


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    out = matmul(x, weight)
    return out if bias is None else out + bias
