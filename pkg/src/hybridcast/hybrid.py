"""Hybrid forecasters composing a linear model with a nonlinear learner.

Two composition modes exist. In residual mode (2) the learner is trained on
lagged residuals of the linear model and the forecast is the sum of the
linear forecast and the predicted residual. In feature mode (1) the learner
is trained on lagged returns augmented with the linear model's one-step
prediction for the target day, and its output IS the forecast; no additive
relation between the components is assumed.

The linear component is fit once per training window. At prediction time its
one-step recursion is re-run from the start of the fit window over the
extended value array, which reproduces the training residuals exactly and
extends them causally over new observations.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .econometric import (
    FittedLinearModel,
    fit_arfima,
    fit_arima,
    forecast_one,
    one_step_series,
)
from .errors import TooShort
from .learners import GbtRegressor, LstmRegressor, SvrRegressor, make_lag_features
from .timeseries import ReturnSeries

__all__ = [
    "HybridSpec",
    "HybridModel",
    "fit_hybrid",
    "forecast_hybrid",
    "forecast_hybrid_many",
    "make_learner",
    "parse_hybrid_label",
]

LINEAR_KINDS = ("arima", "arfima")
LEARNER_KINDS = ("svm", "xgboost", "lstm")
_LEARNER_LABEL = {"svm": "SVM", "xgboost": "XGBoost", "lstm": "LSTM"}
_LEARNER_ALIAS = {"svm": "svm", "svr": "svm", "xgboost": "xgboost",
                  "gbt": "xgboost", "lstm": "lstm"}

_LABEL_RE = re.compile(
    r"^\s*(svm|svr|xgboost|gbt|lstm)\s*-\s*(arima|arfima)"
    r"\s*\(\s*([12])\s*\)\s*$",
    re.IGNORECASE,
)


def parse_hybrid_label(text: str) -> "HybridSpec | None":
    """Parse labels like ``SVM-ARIMA (1)`` or ``lstm-arfima(2)``."""
    m = _LABEL_RE.match(text)
    if m is None:
        return None
    learner = _LEARNER_ALIAS[m.group(1).lower()]
    return HybridSpec(learner_kind=learner, linear_kind=m.group(2).lower(),
                      mode=int(m.group(3)))


def make_learner(kind: str, params: Mapping, seed: int):
    params = dict(params)
    params.pop("lag_n", None)
    if kind == "svm":
        return SvrRegressor(**params)
    if kind == "xgboost":
        return GbtRegressor(**params)
    if kind == "lstm":
        params.setdefault("seed", seed)
        return LstmRegressor(**params)
    raise ValueError(f"unknown learner kind {kind!r}")


@dataclass(frozen=True)
class HybridSpec:
    """Identity and hyperparameters of one hybrid method.

    mode 1 feeds the linear one-step prediction to the learner as an extra
    feature; mode 2 trains the learner on linear residuals and adds the
    outputs. lag_n is the lag count for tabular learners; the LSTM uses its
    own sequence_length instead.
    """

    learner_kind: str
    linear_kind: str
    mode: int
    lag_n: int = 10
    learner_params: Mapping = field(default_factory=dict)
    linear_params: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.learner_kind not in LEARNER_KINDS:
            raise ValueError(f"unknown learner kind {self.learner_kind!r}")
        if self.linear_kind not in LINEAR_KINDS:
            raise ValueError(f"unknown linear kind {self.linear_kind!r}")
        if self.mode not in (1, 2):
            raise ValueError("mode must be 1 or 2")
        if self.lag_n < 1:
            raise ValueError("lag_n must be at least 1")

    @property
    def label(self) -> str:
        return (f"{_LEARNER_LABEL[self.learner_kind]}-"
                f"{self.linear_kind.upper()} ({self.mode})")


@dataclass
class HybridModel:
    """A fitted hybrid: frozen linear component plus fitted learner."""

    spec: HybridSpec
    linear: FittedLinearModel
    nonlinear: object

    @property
    def mode(self) -> int:
        return self.spec.mode

    @property
    def lag_n(self) -> int:
        return self.spec.lag_n


def _fit_linear(spec: HybridSpec, values: np.ndarray) -> FittedLinearModel:
    if spec.linear_kind == "arima":
        return fit_arima(values, **dict(spec.linear_params))
    return fit_arfima(values, **dict(spec.linear_params))


def _finite_head(fitted: np.ndarray) -> int:
    finite = np.isfinite(fitted)
    if not finite.any():
        raise TooShort("linear recursion produced no usable fitted values")
    return int(np.argmax(finite))


def fit_hybrid(spec: HybridSpec, train: ReturnSeries | np.ndarray,
               seed: int = 0,
               linear: FittedLinearModel | None = None) -> HybridModel:
    """Fit the linear component on train, then the learner per the mode.

    A caller holding an already-fitted linear model for exactly these
    training values may pass it to skip the refit.
    """
    values = train.values if isinstance(train, ReturnSeries) else np.asarray(
        train, dtype=np.float64)
    if linear is None:
        linear = _fit_linear(spec, values)
    fitted, resid = one_step_series(linear, values)
    head = _finite_head(fitted)
    n = len(values)
    learner = make_learner(spec.learner_kind, spec.learner_params, seed)

    if spec.learner_kind == "lstm":
        seq = int(learner.sequence_length)
        if spec.mode == 2:
            sub = resid[head:]
            if len(sub) < seq + 1:
                raise TooShort("not enough residuals for one LSTM sequence")
            learner.fit(sub[:-1, None], sub[1:])
        else:
            # row j carries the observed value and the linear one-step
            # prediction for day j+1, so each sequence ends with the
            # prediction for its target day
            rows = np.column_stack([values[head - 1:n - 1] if head > 0
                                    else values[:n - 1],
                                    fitted[max(head, 1):n]])
            targets = values[max(head, 1):n]
            if len(rows) < seq:
                raise TooShort("not enough rows for one LSTM sequence")
            learner.fit(rows, targets)
        return HybridModel(spec=spec, linear=linear, nonlinear=learner)

    lag_n = spec.lag_n
    if spec.mode == 2:
        sub = resid[head:]
        fm = make_lag_features(sub, lag_n)
        learner.fit(fm.X, fm.y)
    else:
        first = max(lag_n, head)
        if first >= n:
            raise TooShort("no training rows after lag and warm-up cut")
        idx = np.arange(first, n)
        fm = make_lag_features(values, lag_n, extra=fitted, indices=idx)
        learner.fit(fm.X, fm.y)
    return HybridModel(spec=spec, linear=linear, nonlinear=learner)


def _mode1_lstm_rows(values, fitted_ext, t, seq):
    # rows t-seq .. t-1; row j = [value_j, linear prediction for j+1]
    lo = t - seq
    if lo < 0 or not np.all(np.isfinite(fitted_ext[lo + 1:t + 1])):
        raise TooShort("history too short for the LSTM sequence")
    return np.column_stack([values[lo:t], fitted_ext[lo + 1:t + 1]])


def forecast_hybrid_many(model: HybridModel, values: np.ndarray,
                         targets: np.ndarray) -> np.ndarray:
    """Forecast each target index using only values strictly before it.

    values must start at the linear fit-window start. Target indices may
    include len(values), meaning one step past the final observation.
    """
    values = np.asarray(values, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.intp)
    n = len(values)
    if len(targets) == 0:
        return np.empty(0)
    if targets.min() < 1 or targets.max() > n:
        raise ValueError("target indices must lie in [1, len(values)]")
    fitted, resid = one_step_series(model.linear, values)
    fitted_ext = np.append(fitted, np.nan)
    resid_ext = np.append(resid, np.nan)
    if targets.max() == n:
        fitted_ext[n] = forecast_one(model.linear, values)
    spec = model.spec
    learner = model.nonlinear

    if spec.learner_kind == "lstm":
        seq = int(learner.sequence_length)
        if spec.mode == 2:
            seqs = []
            for t in targets:
                window = resid_ext[t - seq:t]
                if t - seq < 0 or not np.all(np.isfinite(window)):
                    raise TooShort("history too short for residual sequence")
                seqs.append(window[:, None])
            nhat = learner.predict(np.stack(seqs))
            return fitted_ext[targets] + nhat
        seqs = [_mode1_lstm_rows(values, fitted_ext, t, seq) for t in targets]
        return learner.predict(np.stack(seqs))

    lag_n = spec.lag_n
    if spec.mode == 2:
        rows = []
        for t in targets:
            window = resid_ext[t - lag_n:t]
            if t - lag_n < 0 or not np.all(np.isfinite(window)):
                raise TooShort("history too short for residual lags")
            rows.append(window[::-1])
        nhat = learner.predict(np.array(rows))
        return fitted_ext[targets] + nhat
    rows = []
    for t in targets:
        if t - lag_n < 0 or not np.isfinite(fitted_ext[t]):
            raise TooShort("history too short for lagged features")
        rows.append(np.append(values[t - lag_n:t][::-1], fitted_ext[t]))
    return learner.predict(np.array(rows))


def forecast_hybrid(model: HybridModel,
                    history: ReturnSeries | np.ndarray) -> float:
    """One-step forecast for the day after the last history observation."""
    values = history.values if isinstance(history, ReturnSeries) else (
        np.asarray(history, dtype=np.float64))
    out = forecast_hybrid_many(model, values, np.array([len(values)]))
    return float(out[0])
