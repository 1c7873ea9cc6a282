"""Finite-difference verification of backward()."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .tensor import Parameter, Tensor, backward, no_grad


def grad_check(
    loss_fn: Callable[[], Tensor],
    params: list[Parameter],
    eps: float = 1e-4,
    n_coords: int = 20,
    seed: int = 0,
    floor: float = 1e-6,
    tamper: Callable[[str, np.ndarray], np.ndarray] | None = None,
) -> float:
    """Max relative error between backward() and central differences.

    ``loss_fn`` rebuilds the scalar loss from the current parameter values.
    Up to ``n_coords`` coordinates per tensor are sampled (all of them for
    smaller tensors). The relative error of a coordinate is
    ``|a - n| / max(|a|, |n|, floor)``.

    ``tamper(name, grad)`` may rewrite the analytic gradient before the
    comparison; it exists to show the harness catches a wrong gradient.
    """
    for p in params:
        if p.dtype != np.float64:
            raise ValueError(f"grad_check needs float64 parameters; {p.name!r} is {p.dtype}")
    for p in params:
        p.grad = None
    backward(loss_fn())
    analytic = {}
    for p in params:
        g = p.grad.copy() if p.grad is not None else np.zeros_like(p.data)
        if tamper is not None:
            g = tamper(p.name, g)
        analytic[id(p)] = g
        p.grad = None

    rng = np.random.default_rng(seed)
    worst = 0.0
    with no_grad():
        for p in params:
            flat = p.data.reshape(-1)
            gflat = analytic[id(p)].reshape(-1)
            k = min(n_coords, flat.size)
            for i in rng.choice(flat.size, size=k, replace=False):
                orig = flat[i]
                flat[i] = orig + eps
                fp = loss_fn().item()
                flat[i] = orig - eps
                fm = loss_fn().item()
                flat[i] = orig
                num = (fp - fm) / (2 * eps)
                a = gflat[i]
                err = abs(a - num) / max(abs(a), abs(num), floor)
                worst = max(worst, err)
    return worst
