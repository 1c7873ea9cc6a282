"""Dense tensors with reverse-mode differentiation.

A :class:`Tensor` wraps a numpy array. Operations that involve a tensor with
``requires_grad`` record a closure that pushes the output gradient back to
its inputs; :func:`backward` walks the recorded graph in reverse topological
order and accumulates gradients on every reachable leaf.
"""

from __future__ import annotations

import contextlib
import threading

import numpy as np

from ..errors import NonFiniteError

_state = threading.local()


def default_dtype():
    return getattr(_state, "dtype", np.float32)


def grad_enabled() -> bool:
    return getattr(_state, "grad_enabled", True)


@contextlib.contextmanager
def float64_mode():
    """Create new tensors and parameters in 64-bit precision inside the block."""
    prev = default_dtype()
    _state.dtype = np.float64
    try:
        yield
    finally:
        _state.dtype = prev


@contextlib.contextmanager
def no_grad():
    """Disable graph recording (evaluation and finite differences)."""
    prev = grad_enabled()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = prev


def _as_array(data, dtype=None):
    # float ndarrays keep their precision; lists, scalars and ints take the default dtype
    arr = np.asarray(data)
    if dtype is not None:
        arr = arr.astype(dtype, copy=False)
    elif arr.dtype.kind != "f" or not isinstance(data, np.ndarray):
        arr = arr.astype(default_dtype())
    return check_finite(arr, "tensor construction")


def check_finite(arr: np.ndarray, op: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"non-finite value produced by {op}")
    return arr


def unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    if grad.shape == tuple(shape):
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_op", "_consumed")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        self.data = _as_array(data, dtype)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None
        self._op = "leaf"
        self._consumed = False

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, op={self._op})"

    @classmethod
    def from_op(cls, data, parents, backward, op: str) -> "Tensor":
        """Build an op result, recording ``backward`` when any parent needs grad."""
        out = cls.__new__(cls)
        out.data = check_finite(np.asarray(data), op)
        out.grad = None
        out._op = op
        out._consumed = False
        if grad_enabled() and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = backward
        else:
            out.requires_grad = False
            out._parents = ()
            out._backward = None
        return out

    def _accumulate(self, g: np.ndarray) -> None:
        if not self.requires_grad:
            return
        g = unbroadcast(g, self.shape)
        if self.grad is None:
            self.grad = g.astype(self.data.dtype, copy=True)
        else:
            self.grad += g

    def zero_grad(self) -> None:
        self.grad = None

    # arithmetic ---------------------------------------------------------
    def __add__(self, other):
        other = _wrap(other)

        def bw(g):
            self._accumulate(g)
            other._accumulate(g)

        return Tensor.from_op(self.data + other.data, (self, other), bw, "add")

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-_wrap(other))

    def __rsub__(self, other):
        return _wrap(other) + (-self)

    def __mul__(self, other):
        other = _wrap(other)

        def bw(g):
            self._accumulate(g * other.data)
            other._accumulate(g * self.data)

        return Tensor.from_op(self.data * other.data, (self, other), bw, "mul")

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _wrap(other)

        def bw(g):
            self._accumulate(g / other.data)
            other._accumulate(-g * self.data / (other.data * other.data))

        return Tensor.from_op(self.data / other.data, (self, other), bw, "div")

    def __matmul__(self, other):
        from .ops import matmul

        return matmul(self, other)

    # shape ----------------------------------------------------------------
    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        src = self.shape

        def bw(g):
            self._accumulate(g.reshape(src))

        return Tensor.from_op(self.data.reshape(shape), (self,), bw, "reshape")

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        inv = tuple(np.argsort(axes))

        def bw(g):
            self._accumulate(g.transpose(inv))

        return Tensor.from_op(self.data.transpose(axes), (self,), bw, "transpose")

    def __getitem__(self, idx):
        src_shape = self.shape

        def bw(g):
            full = np.zeros(src_shape, dtype=g.dtype)
            np.add.at(full, idx, g)
            self._accumulate(full)

        return Tensor.from_op(self.data[idx], (self,), bw, "getitem")

    # reductions -------------------------------------------------------------
    def sum(self, axis=None, keepdims: bool = False):
        src_shape = self.shape

        def bw(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            self._accumulate(np.broadcast_to(g, src_shape))

        return Tensor.from_op(self.data.sum(axis=axis, keepdims=keepdims), (self,), bw, "sum")

    def mean(self, axis=None, keepdims: bool = False):
        n = self.size if axis is None else np.prod([self.shape[a] for a in np.atleast_1d(axis)])
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / float(n))


def _wrap(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x)


class Parameter(Tensor):
    """A trainable leaf tensor with a persistent, summing gradient accumulator."""

    __slots__ = ("name",)

    def __init__(self, value, name: str = ""):
        super().__init__(value, requires_grad=True)
        self.name = name

    @property
    def value(self) -> np.ndarray:
        return self.data

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.shape}, dtype={self.dtype})"


def backward(loss: Tensor) -> None:
    """Populate ``.grad`` on every parameter reachable from the scalar ``loss``.

    Gradients add onto whatever a parameter already holds, so a parameter
    used several times (or across several losses) receives the sum. The
    graph is released afterwards; calling this twice on the same loss
    raises ``RuntimeError``.
    """
    if loss._consumed:
        raise RuntimeError("backward() called twice on the same graph; rebuild the loss first")
    if loss.size != 1:
        raise ValueError(f"backward() needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise RuntimeError("loss does not depend on any parameter")

    order = []
    seen = set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))

    loss.grad = np.ones_like(loss.data)
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)

    for node in order:
        if node._backward is not None:
            node._parents = ()
            node._backward = None
            node.grad = None
    loss._consumed = True
