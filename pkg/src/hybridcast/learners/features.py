"""Lag-feature construction for the nonlinear regressors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch, MisalignedForecast, TooShort

__all__ = ["FeatureMatrix", "make_lag_features", "make_sequences"]


@dataclass(frozen=True)
class FeatureMatrix:
    """Rows of lagged values; row for target index t holds [v_{t-1}..v_{t-n}]."""

    X: np.ndarray  # (rows, n_lags [+ extras])
    y: np.ndarray  # (rows,)
    target_indices: np.ndarray  # position of each target in the source array
    n_lags: int

    def __post_init__(self):
        if self.X.ndim != 2 or self.y.ndim != 1 or len(self.X) != len(self.y):
            raise DimensionMismatch("feature matrix rows and targets must align")

    def __len__(self) -> int:
        return len(self.y)


def make_lag_features(values, n_lags: int, extra=None,
                      indices=None) -> FeatureMatrix:
    """Build the lag matrix of a series.

    Row for target index t has columns [v_{t-1}, v_{t-2}, ..., v_{t-n_lags}],
    most recent lag first, and target v_t. `extra` (aligned to the source
    series) appends one more column, extra[t], to each row -- the slot the
    hybrid's linear forecast rides in. `indices` restricts the targets;
    the default is every index from n_lags onward.
    """
    v = np.asarray(getattr(values, "values", values), dtype=np.float64)
    if n_lags < 1:
        raise ValueError("n_lags must be at least 1")
    if len(v) <= n_lags:
        raise TooShort(f"need more than {n_lags} observations, got {len(v)}")
    if indices is None:
        idx = np.arange(n_lags, len(v))
    else:
        idx = np.asarray(indices, dtype=np.intp)
        if len(idx) == 0:
            raise TooShort("no target indices supplied")
        if idx.min() < n_lags or idx.max() >= len(v):
            raise DimensionMismatch(
                f"target indices must lie in [{n_lags}, {len(v) - 1}]"
            )
    X = np.column_stack([v[idx - k] for k in range(1, n_lags + 1)])
    y = v[idx]
    if extra is not None:
        ex = np.asarray(extra, dtype=np.float64)
        if ex.shape != v.shape:
            raise MisalignedForecast(
                f"extra column has shape {ex.shape}, series has {v.shape}"
            )
        X = np.column_stack([X, ex[idx]])
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DimensionMismatch("lag features touched non-finite values")
    return FeatureMatrix(X=X, y=y, target_indices=idx, n_lags=n_lags)


def make_sequences(X: np.ndarray, seq_len: int) -> np.ndarray:
    """Stack consecutive rows into (n - seq_len + 1, seq_len, n_features).

    Sequence s ends at row s + seq_len - 1; a model predicting from the
    final timestep therefore aligns with that row's target.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionMismatch("sequences are built from a 2-D row matrix")
    if seq_len < 1 or len(X) < seq_len:
        raise TooShort(
            f"need at least {seq_len} consecutive rows, got {len(X)}"
        )
    n = len(X) - seq_len + 1
    return np.stack([X[s:s + seq_len] for s in range(n)])
