"""Small numpy-backed tensor engine with reverse-mode differentiation."""

from .gradcheck import grad_check
from .ops import (
    cross_entropy,
    dropout,
    embedding,
    gelu,
    layer_norm,
    linear,
    masked_mean,
    masked_softmax,
    matmul,
    softmax_rows,
)
from .optim import AdamState, adam_step, clip_grad_norm, zero_grad
from .rng import RngStreams, derive_seed, splitmix64
from .tensor import Parameter, Tensor, backward, default_dtype, float64_mode, no_grad

__all__ = [
    "AdamState",
    "Parameter",
    "RngStreams",
    "Tensor",
    "adam_step",
    "backward",
    "clip_grad_norm",
    "cross_entropy",
    "default_dtype",
    "derive_seed",
    "dropout",
    "embedding",
    "float64_mode",
    "gelu",
    "grad_check",
    "layer_norm",
    "linear",
    "masked_mean",
    "masked_softmax",
    "matmul",
    "no_grad",
    "softmax_rows",
    "splitmix64",
    "zero_grad",
]
