"""Adam with bias correction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import Parameter


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def _key(p: Parameter):
    return p.name or id(p)


def adam_step(params: list[Parameter], state: AdamState) -> AdamState:
    """One bias-corrected Adam update in place; increments ``t`` and zeroes grads.

    A parameter whose ``grad`` is None is treated as having a zero gradient.
    """
    state.t += 1
    c1 = 1.0 - state.beta1**state.t
    c2 = 1.0 - state.beta2**state.t
    seen = set()
    for p in params:
        k = _key(p)
        if k in seen:
            raise ValueError(f"duplicate parameter name {k!r}")
        seen.add(k)
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        m = state.m.get(k)
        if m is None:
            m = state.m[k] = np.zeros_like(p.data)
            state.v[k] = np.zeros_like(p.data)
        v = state.v[k]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        step = state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        p.data -= step.astype(p.data.dtype, copy=False)
        p.grad = None
    return state


def zero_grad(params) -> None:
    for p in params:
        p.grad = None


def clip_grad_norm(params, max_norm: float) -> float:
    """Scale gradients so their global L2 norm is at most ``max_norm``; returns the pre-clip norm."""
    total = float(np.sqrt(sum(float((p.grad.astype(np.float64) ** 2).sum()) for p in params if p.grad is not None)))
    if total > max_norm > 0:
        scale = max_norm / (total + 1e-12)
        for p in params:
            if p.grad is not None:
                p.grad *= scale
    return total
