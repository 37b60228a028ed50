"""Input-validation helpers shared by the estimators."""
from __future__ import annotations

import numpy as np
from sklearn.exceptions import NotFittedError

from ..errors import DimensionMismatch

__all__ = ["as_matrix", "as_vector", "check_xy", "check_fitted"]


def as_matrix(X, name: str = "X") -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DimensionMismatch(f"{name} contains non-finite values")
    return X


def as_vector(y, name: str = "y") -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(y)):
        raise DimensionMismatch(f"{name} contains non-finite values")
    return y


def check_xy(X, y) -> tuple[np.ndarray, np.ndarray]:
    X, y = as_matrix(X), as_vector(y)
    if len(X) != len(y):
        raise DimensionMismatch(
            f"X has {len(X)} rows but y has {len(y)} entries"
        )
    if len(X) == 0:
        raise DimensionMismatch("need at least one training row")
    return X, y


def check_fitted(est, attr: str):
    if not hasattr(est, attr):
        raise NotFittedError(
            f"{type(est).__name__} is not fitted yet; call fit first"
        )
