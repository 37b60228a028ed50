"""Integer and fractional differencing operators.

Fractional differencing expands (1 - B)^d into a truncated binomial series;
the weights obey w_0 = 1, w_k = -w_{k-1} * (d - k + 1) / k.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TooShort

__all__ = ["difference", "FracWeights", "frac_diff_weights", "frac_difference"]


def difference(x, d: int) -> np.ndarray:
    """Apply the integer difference operator d times; output length n - d."""
    if d < 0:
        raise ValueError("difference order must be non-negative")
    out = np.asarray(x, dtype=np.float64)
    if len(out) <= d:
        raise TooShort(f"need more than {d} observations to difference {d} times")
    for _ in range(d):
        out = np.diff(out)
    return out


@dataclass(frozen=True)
class FracWeights:
    """Truncated binomial-expansion weights of (1 - B)^d."""

    d: float
    trunc: int  # K; weights has K + 1 entries
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if len(w) != self.trunc + 1:
            raise ValueError("weights length must be trunc + 1")
        object.__setattr__(self, "weights", w)


def frac_diff_weights(d: float, trunc: int) -> FracWeights:
    """Weights w_0..w_K of the truncated fractional difference operator."""
    if not -0.5 < d < 0.5:
        raise ValueError(f"fractional order must lie in (-0.5, 0.5), got {d}")
    if trunc < 0:
        raise ValueError("truncation depth must be non-negative")
    w = np.empty(trunc + 1, dtype=np.float64)
    w[0] = 1.0
    for k in range(1, trunc + 1):
        w[k] = -w[k - 1] * (d - k + 1.0) / k
    return FracWeights(d=float(d), trunc=trunc, weights=w)


def frac_difference(x, d: float, trunc: int = 100) -> np.ndarray:
    """y_t = sum_{k=0..K} w_k x_{t-k}, defined for t >= K; output length n - K."""
    x = np.asarray(x, dtype=np.float64)
    fw = frac_diff_weights(d, trunc)
    if len(x) <= trunc:
        raise TooShort(
            f"need more than {trunc} observations for truncation depth {trunc}"
        )
    # convolution flips the kernel, which is exactly the lag structure we want
    return np.convolve(x, fw.weights, mode="valid")
