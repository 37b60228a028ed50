"""Registry mapping method labels to fit/predict drivers.

A method is anything the walk-forward engine can calibrate: it exposes a
label, a hyperparameter grid, and fit(values, candidate, seed) returning a
predictor with predict_targets(values, indices). Indices address the value
array, which always starts at the fit-window start; index len(values) means
one step past the end. Every forecast uses only values strictly before its
target index.
"""
from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .econometric import fit_arfima, fit_arima, forecast_one, one_step_series
from .errors import TooShort
from .hybrid import (
    HybridModel,
    HybridSpec,
    fit_hybrid,
    forecast_hybrid_many,
    make_learner,
    parse_hybrid_label,
)
from .learners import make_lag_features

__all__ = [
    "DEFAULT_GRIDS",
    "ALL_METHOD_LABELS",
    "Method",
    "make_method",
    "merge_grids",
]

DEFAULT_GRIDS: dict = {
    "lags": [5, 10, 22],
    "svm": {"C": [0.1, 1.0, 10.0], "epsilon": [1e-4, 1e-3],
            "kernel": ["linear", "rbf"]},
    "xgboost": {"n_estimators": [100, 300], "max_depth": [2, 3],
                "learning_rate": [0.05, 0.1]},
    "lstm": {"hidden_size": [8, 16], "sequence_length": [10, 22]},
    "lstm_fixed": {"epochs": 100, "learning_rate": 0.01, "batch_size": 64},
    "linear": {"max_p": 5, "max_q": 5},
}

_LINEAR_LABELS = {"arima": "ARIMA", "arfima": "ARFIMA"}
_LEARNER_LABELS = {"svm": "SVM", "xgboost": "XGBoost", "lstm": "LSTM"}
_LEARNER_ALIAS = {"svm": "svm", "svr": "svm", "xgboost": "xgboost",
                  "gbt": "xgboost", "lstm": "lstm"}

ALL_METHOD_LABELS = (
    ["ARIMA", "ARFIMA", "SVM", "XGBoost", "LSTM"]
    + [f"{_LEARNER_LABELS[lk]}-{_LINEAR_LABELS[ln]} ({m})"
       for lk in ("svm", "xgboost", "lstm")
       for ln in ("arima", "arfima")
       for m in (1, 2)]
)


def merge_grids(overrides: Mapping | None) -> dict:
    """Deep-merge config grid overrides onto the defaults."""
    grids = {k: (dict(v) if isinstance(v, dict) else list(v))
             for k, v in DEFAULT_GRIDS.items()}
    for key, val in (overrides or {}).items():
        if key not in grids:
            raise ValueError(f"unknown grid section {key!r}")
        if isinstance(grids[key], dict):
            grids[key].update(val)
        else:
            grids[key] = list(val)
    return grids


def _product(named: Mapping) -> list[dict]:
    keys = list(named)
    out = []
    for combo in itertools.product(*(named[k] for k in keys)):
        out.append(dict(zip(keys, combo)))
    return out


def _digest(values: np.ndarray) -> str:
    return hashlib.sha1(values.tobytes()).hexdigest()


class _LinearPredictor:
    def __init__(self, model):
        self.model = model

    def predict_targets(self, values, targets):
        values = np.asarray(values, dtype=np.float64)
        targets = np.asarray(targets, dtype=np.intp)
        n = len(values)
        fitted, _ = one_step_series(self.model, values)
        fitted_ext = np.append(fitted, np.nan)
        if len(targets) and targets.max() == n:
            fitted_ext[n] = forecast_one(self.model, values)
        out = fitted_ext[targets]
        if not np.all(np.isfinite(out)):
            raise TooShort("target index inside the linear warm-up region")
        return out


class _LagLearnerPredictor:
    def __init__(self, estimator, lag_n):
        self.estimator = estimator
        self.lag_n = int(lag_n)

    def predict_targets(self, values, targets):
        values = np.asarray(values, dtype=np.float64)
        rows = []
        for t in targets:
            if t - self.lag_n < 0:
                raise TooShort("history too short for lagged features")
            rows.append(values[t - self.lag_n:t][::-1])
        return self.estimator.predict(np.array(rows))


class _SeqLearnerPredictor:
    def __init__(self, estimator):
        self.estimator = estimator

    def predict_targets(self, values, targets):
        values = np.asarray(values, dtype=np.float64)
        seq = int(self.estimator.sequence_length)
        windows = []
        for t in targets:
            if t - seq < 0:
                raise TooShort("history too short for the LSTM sequence")
            windows.append(values[t - seq:t, None])
        return self.estimator.predict(np.stack(windows))


class _HybridPredictor:
    def __init__(self, model: HybridModel):
        self.model = model

    def predict_targets(self, values, targets):
        return forecast_hybrid_many(self.model, values,
                                    np.asarray(targets, dtype=np.intp))


@dataclass(frozen=True)
class MethodSpec:
    """Parsed identity of one of the seventeen methods."""

    family: str  # linear | learner | hybrid
    linear_kind: str | None = None
    learner_kind: str | None = None
    mode: int | None = None

    @property
    def label(self) -> str:
        if self.family == "linear":
            return _LINEAR_LABELS[self.linear_kind]
        if self.family == "learner":
            return _LEARNER_LABELS[self.learner_kind]
        return (f"{_LEARNER_LABELS[self.learner_kind]}-"
                f"{_LINEAR_LABELS[self.linear_kind]} ({self.mode})")


def parse_method(text: str) -> MethodSpec:
    """Resolve a config string to a method, case-insensitively."""
    plain = text.strip().lower()
    if plain in _LINEAR_LABELS:
        return MethodSpec(family="linear", linear_kind=plain)
    if plain in _LEARNER_ALIAS:
        return MethodSpec(family="learner",
                          learner_kind=_LEARNER_ALIAS[plain])
    hybrid = parse_hybrid_label(text)
    if hybrid is not None:
        return MethodSpec(family="hybrid", linear_kind=hybrid.linear_kind,
                          learner_kind=hybrid.learner_kind, mode=hybrid.mode)
    raise ValueError(f"unknown method {text!r}")


@dataclass
class Method:
    """One asset-level forecasting method bound to its search grid."""

    spec: MethodSpec
    grids: dict = field(default_factory=lambda: merge_grids(None))
    linear_cache: dict = field(default_factory=dict)

    @property
    def label(self) -> str:
        return self.spec.label

    def candidates(self) -> list[dict]:
        spec, grids = self.spec, self.grids
        if spec.family == "linear":
            return [dict(grids["linear"])]
        if spec.learner_kind == "lstm":
            cands = _product(grids["lstm"])
            for c in cands:
                c.update(grids["lstm_fixed"])
            return cands
        base = _product(grids[spec.learner_kind])
        return [dict(c, lag_n=n) for n in grids["lags"] for c in base]

    def _linear_model(self, kind: str, values: np.ndarray):
        caps = self.grids["linear"]
        key = (kind, caps["max_p"], caps["max_q"], len(values),
               _digest(values))
        model = self.linear_cache.get(key)
        if model is None:
            fitter = fit_arima if kind == "arima" else fit_arfima
            model = fitter(values, **caps)
            self.linear_cache[key] = model
        return model

    def fit(self, values: np.ndarray, candidate: Mapping, seed: int):
        values = np.asarray(values, dtype=np.float64)
        spec = self.spec
        if spec.family == "linear":
            return _LinearPredictor(self._linear_model(spec.linear_kind,
                                                       values))
        if spec.family == "learner":
            params = dict(candidate)
            lag_n = params.pop("lag_n", None)
            est = make_learner(spec.learner_kind, params, seed)
            if spec.learner_kind == "lstm":
                if len(values) < est.sequence_length + 1:
                    raise TooShort("series shorter than one LSTM sequence")
                est.fit(values[:-1, None], values[1:])
                return _SeqLearnerPredictor(est)
            fm = make_lag_features(values, int(lag_n))
            est.fit(fm.X, fm.y)
            return _LagLearnerPredictor(est, lag_n)
        params = dict(candidate)
        lag_n = int(params.pop("lag_n", 10))
        hspec = HybridSpec(learner_kind=spec.learner_kind,
                           linear_kind=spec.linear_kind, mode=spec.mode,
                           lag_n=lag_n, learner_params=params,
                           linear_params=dict(self.grids["linear"]))
        linear = self._linear_model(spec.linear_kind, values)
        model = fit_hybrid(hspec, values, seed=seed, linear=linear)
        return _HybridPredictor(model)


def make_method(text: str, grid_overrides: Mapping | None = None,
                linear_cache: dict | None = None) -> Method:
    return Method(spec=parse_method(text), grids=merge_grids(grid_overrides),
                  linear_cache={} if linear_cache is None else linear_cache)
