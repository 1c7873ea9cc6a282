"""Input checks for the estimator API."""

from __future__ import annotations

import numpy as np


def check_texts(X, name: str = "X") -> list[str]:
    """Coerce an iterable of strings (list, array, Series) to ``list[str]``."""
    if isinstance(X, (str, bytes)):
        raise TypeError(f"{name} must be an iterable of strings, not a single string")
    if hasattr(X, "ndim") and getattr(X, "ndim", 1) != 1:
        raise ValueError(f"{name} must be one-dimensional, got ndim={X.ndim}")
    out = []
    for i, x in enumerate(X):
        if not isinstance(x, str):
            if x is None or (isinstance(x, float) and np.isnan(x)):
                x = ""
            else:
                raise TypeError(f"{name}[{i}] is {type(x).__name__}, expected str")
        out.append(x)
    return out


def check_labels(y, n: int | None = None, name: str = "y") -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if y.size and y.dtype.kind == "f":
        if not np.all(np.mod(y, 1) == 0):
            raise ValueError(f"{name} must hold integer class ids")
    elif y.size and y.dtype.kind not in "iu":
        raise ValueError(f"{name} must hold integer class ids, got dtype {y.dtype}")
    y = y.astype(np.int64)
    if y.size and y.min() < 0:
        raise ValueError(f"{name} has negative class ids")
    if n is not None and len(y) != n:
        raise ValueError(f"{name} has {len(y)} entries, expected {n}")
    return y
