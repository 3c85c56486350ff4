"""Small numerical kernels used throughout the package.

Softmax and log-sum-exp are written with max-subtraction so that large
logits (e.g. similarities divided by a temperature of 0.02) never overflow.
"""

from __future__ import annotations

import numpy as np

from .errors import NonFiniteError


def check_finite(arr: np.ndarray, name: str = "array") -> np.ndarray:
    """Raise :class:`NonFiniteError` if ``arr`` contains NaN or Inf."""
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains non-finite values")
    return arr


def softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    """Numerically stable softmax along ``axis``.

    Subtracting the per-slice maximum keeps every exponent <= 0, so the
    result is exact up to rounding for arbitrarily large logits.
    """
    z = np.asarray(z, dtype=np.float64)
    shifted = z - np.max(z, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def logsumexp(z: np.ndarray, axis: int = -1) -> np.ndarray:
    """Stable log(sum(exp(z))) along ``axis``."""
    z = np.asarray(z, dtype=np.float64)
    m = np.max(z, axis=axis, keepdims=True)
    out = np.log(np.sum(np.exp(z - m), axis=axis, keepdims=True)) + m
    return np.squeeze(out, axis=axis)


def layer_norm(x: np.ndarray, gain: np.ndarray, bias: np.ndarray,
               eps: float = 1e-12) -> np.ndarray:
    """Layer normalization over the last axis: gain * (x - mean)/std + bias."""
    x = np.asarray(x, dtype=np.float64)
    mean = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return gain * (x - mean) / np.sqrt(var + eps) + bias
