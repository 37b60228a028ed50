"""Gradient-boosted regression trees with second-order leaf weights.

Squared loss, so the per-sample gradient is (pred - y) and the hessian is 1.
Each tree is grown by exact greedy search over axis-aligned splits; a leaf's
value is -G / (H + lambda) and a split is kept only when its gain

    0.5 * (G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda))

exceeds gamma_split. The ensemble predicts
base_score + learning_rate * sum(tree outputs).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .base import ColumnScaler
from .checks import as_matrix, check_fitted, check_xy

__all__ = ["GbtRegressor", "TreeNode"]


@dataclass
class TreeNode:
    value: float = 0.0
    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


class GbtRegressor(RegressorMixin, BaseEstimator):
    def __init__(self, n_estimators: int = 100, max_depth: int = 3,
                 learning_rate: float = 0.1, reg_lambda: float = 1.0,
                 gamma_split: float = 0.0):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.learning_rate = learning_rate
        self.reg_lambda = reg_lambda
        self.gamma_split = gamma_split

    def fit(self, X, y) -> "GbtRegressor":
        X, y = check_xy(X, y)
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be at least 1")
        if self.max_depth < 0:
            raise ValueError("max_depth must be non-negative")
        self.x_scaler_ = ColumnScaler().fit(X)
        Xs = self.x_scaler_.transform(X)
        self.base_score_ = float(np.mean(y))
        pred = np.full(len(y), self.base_score_)
        self.trees_: list[TreeNode] = []
        lam = float(self.reg_lambda)
        for _ in range(self.n_estimators):
            g = pred - y  # d/dpred of 0.5*(pred - y)^2
            h = np.ones(len(y))
            root = self._grow(Xs, g, h, np.arange(len(y)), depth=0, lam=lam)
            out = np.empty(len(y))
            self._apply(root, Xs, np.arange(len(y)), out)
            pred = pred + self.learning_rate * out
            self.trees_.append(root)
        return self

    def _grow(self, X, g, h, rows, depth, lam) -> TreeNode:
        G, H = float(np.sum(g[rows])), float(np.sum(h[rows]))
        node = TreeNode(value=-G / (H + lam))
        if depth >= self.max_depth or len(rows) < 2:
            return node
        parent_score = G * G / (H + lam)
        best_gain = 0.0
        best = None
        for f in range(X.shape[1]):
            order = rows[np.argsort(X[rows, f], kind="stable")]
            xs = X[order, f]
            gl = np.cumsum(g[order])[:-1]
            hl = np.cumsum(h[order])[:-1]
            valid = xs[:-1] < xs[1:]  # split only between distinct values
            if not valid.any():
                continue
            gain = 0.5 * (
                gl**2 / (hl + lam)
                + (G - gl) ** 2 / (H - hl + lam)
                - parent_score
            )
            gain[~valid] = -np.inf
            k = int(np.argmax(gain))
            if gain[k] > best_gain and gain[k] > self.gamma_split:
                best_gain = float(gain[k])
                thr = 0.5 * (xs[k] + xs[k + 1])
                best = (f, thr, order[: k + 1], order[k + 1:])
        if best is None:
            return node
        f, thr, left_rows, right_rows = best
        node.feature = f
        node.threshold = float(thr)
        node.left = self._grow(X, g, h, left_rows, depth + 1, lam)
        node.right = self._grow(X, g, h, right_rows, depth + 1, lam)
        return node

    def _apply(self, node: TreeNode, X, rows, out) -> None:
        if node.is_leaf:
            out[rows] = node.value
            return
        mask = X[rows, node.feature] <= node.threshold
        self._apply(node.left, X, rows[mask], out)
        self._apply(node.right, X, rows[~mask], out)

    def tree_outputs(self, X) -> np.ndarray:
        """Raw per-tree outputs, shape (n_trees, n_samples)."""
        check_fitted(self, "trees_")
        X = as_matrix(X)
        Xs = self.x_scaler_.transform(X)
        outs = np.empty((len(self.trees_), len(X)))
        rows = np.arange(len(X))
        for k, tree in enumerate(self.trees_):
            self._apply(tree, Xs, rows, outs[k])
        return outs

    def predict(self, X) -> np.ndarray:
        check_fitted(self, "trees_")
        return self.base_score_ + self.learning_rate * self.tree_outputs(X).sum(axis=0)
