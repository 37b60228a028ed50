"""Single-layer LSTM regressor trained by truncated-free BPTT and plain SGD.

Gate equations per timestep (v_t is the input row, h the hidden state, s the
cell state, sigma the logistic function):

    f_t = sigma(W_fv v_t + W_fh h_{t-1} + b_f)        forget
    c_t = tanh (W_cv v_t + W_ch h_{t-1} + b_c)        candidate cell
    i_t = sigma(W_iv v_t + W_ih h_{t-1} + b_i)        input
    s_t = f_t * s_{t-1} + i_t * c_t                   cell update
    o_t = sigma(W_ov v_t + W_oh h_{t-1} + b_o)        output
    h_t = o_t * tanh(s_t)

A linear read-out of the final hidden state produces the prediction. All
weights start uniform(-init_scale, init_scale) from a seeded generator;
gradients are clipped to a global norm before each SGD step. Features and
target are standardized with training statistics.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from ..errors import DimensionMismatch, NonFiniteLoss
from .base import ColumnScaler, TargetScaler
from .checks import as_vector, check_fitted
from .features import make_sequences

__all__ = ["LstmRegressor"]

_PARAM_KEYS = ("Wfv", "Wfh", "bf", "Wcv", "Wch", "bc",
               "Wiv", "Wih", "bi", "Wov", "Woh", "bo", "wy", "by")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class LstmRegressor(RegressorMixin, BaseEstimator):
    """Recurrent regressor over sequences of consecutive feature rows.

    fit/predict accept either a 3-D array (n_sequences, sequence_length,
    n_features) or a 2-D row matrix that is windowed into overlapping
    sequences; in the 2-D case the first sequence_length - 1 rows only
    provide context, so predictions align with rows sequence_length-1 onward.
    """

    def __init__(self, hidden_size: int = 8, sequence_length: int = 10,
                 epochs: int = 100, learning_rate: float = 0.01,
                 batch_size: int = 64, clip_norm: float = 1.0,
                 init_scale: float = 0.08, seed: int = 0):
        self.hidden_size = hidden_size
        self.sequence_length = sequence_length
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.clip_norm = clip_norm
        self.init_scale = init_scale
        self.seed = seed

    # ---------------------------------------------------------------- setup

    def _init_params(self, n_features: int, rng) -> dict:
        H, F, a = self.hidden_size, n_features, self.init_scale
        shapes = {
            "Wfv": (F, H), "Wfh": (H, H), "bf": (H,),
            "Wcv": (F, H), "Wch": (H, H), "bc": (H,),
            "Wiv": (F, H), "Wih": (H, H), "bi": (H,),
            "Wov": (F, H), "Woh": (H, H), "bo": (H,),
            "wy": (H,), "by": (),
        }
        return {k: rng.uniform(-a, a, shapes[k]) for k in _PARAM_KEYS}

    def _as_sequences(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 2:
            return make_sequences(X, self.sequence_length)
        if X.ndim == 3:
            if X.shape[1] != self.sequence_length:
                raise DimensionMismatch(
                    f"sequences have length {X.shape[1]}, "
                    f"expected {self.sequence_length}"
                )
            return X
        raise DimensionMismatch("X must be 2-D rows or 3-D sequences")

    # ------------------------------------------------------------- numerics

    def _forward(self, params: dict, X3: np.ndarray):
        B, T, _ = X3.shape
        H = self.hidden_size
        h = np.zeros((B, H))
        s = np.zeros((B, H))
        cache = []
        for t in range(T):
            v = X3[:, t, :]
            f = _sigmoid(v @ params["Wfv"] + h @ params["Wfh"] + params["bf"])
            c = np.tanh(v @ params["Wcv"] + h @ params["Wch"] + params["bc"])
            i = _sigmoid(v @ params["Wiv"] + h @ params["Wih"] + params["bi"])
            s_new = f * s + i * c
            o = _sigmoid(v @ params["Wov"] + h @ params["Woh"] + params["bo"])
            tanh_s = np.tanh(s_new)
            h_new = o * tanh_s
            cache.append((v, h, s, f, c, i, o, s_new, tanh_s))
            h, s = h_new, s_new
        pred = h @ params["wy"] + params["by"]
        return pred, h, cache

    def loss_and_grads(self, X3, y) -> tuple[float, dict]:
        """Mean squared error and its unclipped parameter gradients."""
        X3 = np.asarray(X3, dtype=np.float64)
        y = as_vector(y)
        params = self.params_
        pred, h_last, cache = self._forward(params, X3)
        B = len(y)
        err = pred - y
        loss = float(np.mean(err**2))
        grads = {k: np.zeros_like(params[k]) for k in _PARAM_KEYS}
        dpred = 2.0 * err / B
        grads["wy"] = h_last.T @ dpred
        grads["by"] = np.asarray(np.sum(dpred))
        dh = dpred[:, None] * params["wy"][None, :]
        ds = np.zeros_like(dh)
        for t in range(len(cache) - 1, -1, -1):
            v, h_prev, s_prev, f, c, i, o, s_new, tanh_s = cache[t]
            do = dh * tanh_s
            ds = ds + dh * o * (1.0 - tanh_s**2)
            df = ds * s_prev
            di = ds * c
            dc = ds * i
            dzf = df * f * (1.0 - f)
            dzi = di * i * (1.0 - i)
            dzo = do * o * (1.0 - o)
            dzc = dc * (1.0 - c**2)
            grads["Wfv"] += v.T @ dzf
            grads["Wfh"] += h_prev.T @ dzf
            grads["bf"] += dzf.sum(axis=0)
            grads["Wcv"] += v.T @ dzc
            grads["Wch"] += h_prev.T @ dzc
            grads["bc"] += dzc.sum(axis=0)
            grads["Wiv"] += v.T @ dzi
            grads["Wih"] += h_prev.T @ dzi
            grads["bi"] += dzi.sum(axis=0)
            grads["Wov"] += v.T @ dzo
            grads["Woh"] += h_prev.T @ dzo
            grads["bo"] += dzo.sum(axis=0)
            dh = (dzf @ params["Wfh"].T + dzc @ params["Wch"].T
                  + dzi @ params["Wih"].T + dzo @ params["Woh"].T)
            ds = ds * f
        return loss, grads

    @staticmethod
    def _clip(grads: dict, max_norm: float) -> dict:
        total = np.sqrt(sum(float(np.sum(g**2)) for g in grads.values()))
        if max_norm > 0.0 and total > max_norm:
            scale = max_norm / total
            return {k: g * scale for k, g in grads.items()}
        return grads

    # ------------------------------------------------------------------ API

    def fit(self, X, y) -> "LstmRegressor":
        X3 = self._as_sequences(X)
        y = as_vector(y)
        if X3.ndim == 3 and len(y) != len(X3):
            # 2-D input: targets align with each window's final row
            if len(y) == len(X3) + self.sequence_length - 1:
                y = y[self.sequence_length - 1:]
            else:
                raise DimensionMismatch(
                    f"{len(X3)} sequences but {len(y)} targets"
                )
        if not np.all(np.isfinite(X3)):
            raise DimensionMismatch("X contains non-finite values")
        n_seq, _, n_feat = X3.shape
        rng = np.random.default_rng(self.seed)
        flat = X3.reshape(-1, n_feat)
        self.x_scaler_ = ColumnScaler().fit(flat)
        self.y_scaler_ = TargetScaler().fit(y)
        Xs = self.x_scaler_.transform(flat).reshape(X3.shape)
        self.params_ = self._init_params(n_feat, rng)
        self.init_params_ = {k: v.copy() for k, v in self.params_.items()}
        if self.y_scaler_.degenerate_:
            # constant target: pin the readout so predictions are the mean
            self.params_["wy"] = np.zeros_like(self.params_["wy"])
            self.params_["by"] = np.zeros(())
            self.losses_ = [0.0]
            return self
        ys = self.y_scaler_.transform(y)
        lr = float(self.learning_rate)
        bs = max(1, int(self.batch_size))
        self.losses_ = []
        # divergence surfaces as NonFiniteLoss, so overflow warnings are noise
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(max(1, int(self.epochs))):
                order = rng.permutation(n_seq)
                for lo in range(0, n_seq, bs):
                    batch = order[lo:lo + bs]
                    loss, grads = self.loss_and_grads(Xs[batch], ys[batch])
                    if not np.isfinite(loss):
                        raise NonFiniteLoss(f"training loss became {loss}")
                    grads = self._clip(grads, float(self.clip_norm))
                    for k in _PARAM_KEYS:
                        # asarray keeps 0-d parameters as ndarrays
                        self.params_[k] = np.asarray(
                            self.params_[k] - lr * grads[k]
                        )
                epoch_pred, _, _ = self._forward(self.params_, Xs)
                epoch_loss = float(np.mean((epoch_pred - ys) ** 2))
                if not np.isfinite(epoch_loss):
                    raise NonFiniteLoss(f"training loss became {epoch_loss}")
                self.losses_.append(epoch_loss)
        return self

    def predict(self, X) -> np.ndarray:
        check_fitted(self, "params_")
        X3 = self._as_sequences(X)
        shape = X3.shape
        flat = self.x_scaler_.transform(X3.reshape(-1, shape[2]))
        pred, _, _ = self._forward(self.params_, flat.reshape(shape))
        return self.y_scaler_.inverse(pred)
