"""Epsilon-insensitive support vector regression solved by SMO.

The primal is J = 0.5*||w||^2 + C * sum(xi + xi*) subject to the epsilon
tube constraints. The solver works on the 2n-variable box-constrained dual
with pairwise coordinate ascent and second-order working-set selection;
the equality constraint sum(alpha - alpha*) = 0 is preserved exactly by
every pair update. Epsilon and C act on the standardized target scale.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from ..errors import NonConvergent
from .base import ColumnScaler, TargetScaler
from .checks import as_matrix, check_fitted, check_xy

__all__ = ["SvrRegressor", "kernel_matrix"]


def kernel_matrix(A: np.ndarray, B: np.ndarray, kernel: str, gamma: float,
                  degree: int, coef0: float) -> np.ndarray:
    if kernel == "linear":
        return A @ B.T
    if kernel == "poly":
        return (gamma * (A @ B.T) + coef0) ** degree
    if kernel == "rbf":
        aa = np.sum(A * A, axis=1)[:, None]
        bb = np.sum(B * B, axis=1)[None, :]
        d2 = np.maximum(aa + bb - 2.0 * (A @ B.T), 0.0)
        return np.exp(-gamma * d2)
    raise ValueError(f"unknown kernel {kernel!r}")


class SvrRegressor(RegressorMixin, BaseEstimator):
    """Support vector regressor with linear, polynomial, and RBF kernels.

    gamma=None means 1 / n_features. tol is the KKT violation tolerance of
    the SMO stopping rule; max_iter caps the number of pair updates.
    """

    def __init__(self, C: float = 1.0, epsilon: float = 1e-3,
                 kernel: str = "rbf", gamma: float | None = None,
                 degree: int = 3, coef0: float = 1.0, tol: float = 1e-3,
                 max_iter: int = 100_000):
        self.C = C
        self.epsilon = epsilon
        self.kernel = kernel
        self.gamma = gamma
        self.degree = degree
        self.coef0 = coef0
        self.tol = tol
        self.max_iter = max_iter

    def _gamma_value(self, n_features: int) -> float:
        return 1.0 / n_features if self.gamma is None else float(self.gamma)

    def fit(self, X, y) -> "SvrRegressor":
        X, y = check_xy(X, y)
        if self.C <= 0.0:
            raise ValueError("C must be positive")
        if self.epsilon < 0.0:
            raise ValueError("epsilon must be non-negative")
        self.x_scaler_ = ColumnScaler().fit(X)
        self.y_scaler_ = TargetScaler().fit(y)
        Xs = self.x_scaler_.transform(X)
        if self.y_scaler_.degenerate_:
            # constant target: the regressor is that constant, no SVs
            self.beta_ = np.zeros(len(y))
            self.intercept_ = 0.0
            self.support_ = np.empty(0, dtype=int)
            self.support_vectors_ = Xs[:0]
            self.dual_coef_ = np.empty(0)
            self.n_iter_ = 0
            self.dual_objective_ = 0.0
            self.primal_objective_ = 0.0
            return self
        ys = self.y_scaler_.transform(y)
        gamma = self._gamma_value(X.shape[1])
        K = kernel_matrix(Xs, Xs, self.kernel, gamma, self.degree, self.coef0)
        beta, b, iters = self._smo(K, ys)
        self.beta_ = beta
        self.intercept_ = b
        self.n_iter_ = iters
        keep = np.abs(beta) > 1e-12
        self.support_ = np.flatnonzero(keep)
        self.support_vectors_ = Xs[keep]
        self.dual_coef_ = beta[keep]
        self._store_objectives(K, ys, beta, b)
        return self

    def _smo(self, K: np.ndarray, y: np.ndarray):
        """Minimize 0.5 b'Kb - y'b + eps*sum(a + a*) over the box/equality."""
        n = len(y)
        C, eps, tol = float(self.C), float(self.epsilon), float(self.tol)
        # variable k < n is alpha_k (sign +1), k >= n is alpha*_{k-n} (sign -1)
        sign = np.concatenate([np.ones(n), -np.ones(n)])
        idx = np.concatenate([np.arange(n), np.arange(n)])
        u = np.zeros(2 * n)
        F = -y.copy()  # K beta - y, with beta = 0
        Kd = np.diag(K).copy()
        iters = 0
        m_val = M_val = 0.0
        pos = sign > 0
        for iters in range(1, self.max_iter + 1):
            G = sign * F[idx] + eps
            minus_yG = -sign * G
            # i moves by +y_i t, j by -y_j t; feasibility depends on the sign
            up = np.where(pos, u < C, u > 0.0)
            down = np.where(pos, u > 0.0, u < C)
            if not up.any() or not down.any():
                break
            m_candidates = np.where(up, minus_yG, -np.inf)
            i = int(np.argmax(m_candidates))
            m_val = float(m_candidates[i])
            M_val = float(np.min(np.where(down, minus_yG, np.inf)))
            if m_val - M_val < tol:
                break
            # second-order choice of j among descent-feasible partners; the
            # pair direction moves beta by (+t, -t) at the underlying samples
            # whatever the variable signs, so curvature has no sign factor
            b_vec = m_val - minus_yG  # m + y_t G_t
            quad = Kd[idx[i]] + Kd[idx] - 2.0 * K[idx[i], idx]
            quad = np.maximum(quad, 1e-12)
            gain = np.where(down & (b_vec > 0.0), (b_vec * b_vec) / quad, -np.inf)
            gain[i] = -np.inf
            j = int(np.argmax(gain))
            if not np.isfinite(gain[j]):
                break
            t = b_vec[j] / quad[j]
            t = min(t, C - u[i] if sign[i] > 0 else u[i])
            t = min(t, u[j] if sign[j] > 0 else C - u[j])
            if t <= 0.0:
                break
            u[i] += sign[i] * t
            u[j] -= sign[j] * t
            # beta at the underlying samples moves by +t and -t respectively
            F += t * (K[:, idx[i]] - K[:, idx[j]])
        else:
            raise NonConvergent(
                f"SMO did not reach tolerance {tol} in {self.max_iter} updates"
            )
        beta = u[:n] - u[n:]
        # KKT for any free variable gives b = -s_k G_k, bracketed by m and M
        b = (m_val + M_val) / 2.0
        return beta, float(b), iters

    def _store_objectives(self, K, ys, beta, b):
        f = K @ beta + b
        r = ys - f
        eps = float(self.epsilon)
        slack = np.maximum(np.abs(r) - eps, 0.0)
        wTw = float(beta @ K @ beta)
        self.primal_objective_ = 0.5 * wTw + self.C * float(np.sum(slack))
        self.dual_objective_ = (
            -0.5 * wTw - eps * float(np.sum(np.abs(beta))) + float(ys @ beta)
        )

    def predict(self, X) -> np.ndarray:
        check_fitted(self, "beta_")
        X = as_matrix(X)
        Xs = self.x_scaler_.transform(X)
        if len(self.support_) == 0:
            zs = np.full(len(X), self.intercept_)
        else:
            gamma = self._gamma_value(X.shape[1])
            Kp = kernel_matrix(Xs, self.support_vectors_, self.kernel, gamma,
                               self.degree, self.coef0)
            zs = Kp @ self.dual_coef_ + self.intercept_
        return self.y_scaler_.inverse(zs)
