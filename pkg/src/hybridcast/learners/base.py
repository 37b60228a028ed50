"""Shared scaling machinery for the estimators.

Every learner standardizes its features with training-set statistics; the
kernel and recurrent models standardize the target too, so hyperparameters
like the epsilon tube width live on a scale-free axis.
"""
from __future__ import annotations

import numpy as np

__all__ = ["ColumnScaler", "TargetScaler"]


class ColumnScaler:
    """Per-column standardizer; constant columns map to zero."""

    def fit(self, X: np.ndarray) -> "ColumnScaler":
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        self.scale_ = np.where(std > 0.0, std, 1.0)
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean_) / self.scale_


class TargetScaler:
    """Scalar standardizer for the target; flags zero variance."""

    def fit(self, y: np.ndarray) -> "TargetScaler":
        self.mean_ = float(np.mean(y))
        std = float(np.std(y))
        self.degenerate_ = std == 0.0
        self.scale_ = std if std > 0.0 else 1.0
        return self

    def transform(self, y: np.ndarray) -> np.ndarray:
        return (y - self.mean_) / self.scale_

    def inverse(self, z: np.ndarray) -> np.ndarray:
        return z * self.scale_ + self.mean_
