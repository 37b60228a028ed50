"""Hybrid composition: naming, feature wiring, and forecast oracles."""
from __future__ import annotations

import dataclasses

import numpy as np
import pytest

import hybridcast.hybrid as hybrid_mod
from hybridcast.econometric import fit_arima, forecast_one, one_step_series
from hybridcast.errors import TooShort
from hybridcast.hybrid import (
    HybridModel,
    HybridSpec,
    fit_hybrid,
    forecast_hybrid,
    forecast_hybrid_many,
    parse_hybrid_label,
)

LIN = {"max_p": 1, "max_q": 0}


def ar1(n, phi=0.6, sigma=0.01, seed=0):
    rng = np.random.default_rng(seed)
    x = np.zeros(n)
    for t in range(1, n):
        x[t] = phi * x[t - 1] + rng.normal(0, sigma)
    return x


class ZeroLearner:
    """Predicts zero for every row or sequence."""

    def __init__(self, sequence_length=None):
        if sequence_length is not None:
            self.sequence_length = sequence_length

    def fit(self, X, y):
        return self

    def predict(self, X):
        return np.zeros(len(np.asarray(X)))


class LastColumnLearner:
    """Echoes the final feature column (the linear forecast in mode 1)."""

    def fit(self, X, y):
        return self

    def predict(self, X):
        return np.asarray(X)[:, -1].copy()


class Recorder:
    """Captures the training matrix handed to the learner."""

    def __init__(self, sequence_length=None):
        if sequence_length is not None:
            self.sequence_length = sequence_length

    def fit(self, X, y):
        self.X = np.array(X, copy=True)
        self.y = np.array(y, copy=True)
        return self

    def predict(self, X):
        self.pred_X = np.array(X, copy=True)
        return np.zeros(len(np.asarray(X)))


class TestNaming:
    def test_twelve_distinct_hybrid_labels(self):
        labels = set()
        for lk in ("svm", "xgboost", "lstm"):
            for ln in ("arima", "arfima"):
                for mode in (1, 2):
                    labels.add(HybridSpec(lk, ln, mode).label)
        assert len(labels) == 12

    def test_parse_round_trip(self):
        for lk in ("svm", "xgboost", "lstm"):
            for ln in ("arima", "arfima"):
                for mode in (1, 2):
                    spec = HybridSpec(lk, ln, mode)
                    parsed = parse_hybrid_label(spec.label)
                    assert parsed is not None
                    assert parsed.label == spec.label

    def test_parse_is_case_and_space_insensitive(self):
        for text in ("svm-arima(1)", "SVM-ARIMA (1)", " Svm - Arima ( 1 ) ",
                     "SVR-ARIMA(1)"):
            spec = parse_hybrid_label(text)
            assert spec is not None and spec.label == "SVM-ARIMA (1)"
        assert parse_hybrid_label("gbt-arfima(2)").label == (
            "XGBoost-ARFIMA (2)")

    def test_parse_rejects_garbage(self):
        for text in ("ARIMA", "SVM", "SVM-ARIMA (3)", "SVM+ARIMA(1)",
                     "SVM-GARCH(1)", ""):
            assert parse_hybrid_label(text) is None

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            HybridSpec("svm", "arima", 3)
        with pytest.raises(ValueError):
            HybridSpec("rf", "arima", 1)
        with pytest.raises(ValueError):
            HybridSpec("svm", "garch", 1)
        with pytest.raises(ValueError):
            HybridSpec("svm", "arima", 1, lag_n=0)


class TestStubComposition:
    def test_mode2_zero_learner_returns_linear_forecast(self):
        x = ar1(300, seed=1)
        linear = fit_arima(x[:250], **LIN)
        spec = HybridSpec("svm", "arima", 2, lag_n=4)
        model = HybridModel(spec=spec, linear=linear, nonlinear=ZeroLearner())
        targets = np.arange(250, 300)
        got = forecast_hybrid_many(model, x, targets)
        fitted, _ = one_step_series(linear, x)
        assert np.array_equal(got, fitted[targets])
        # one step past the end goes through the explicit forecast path
        nxt = forecast_hybrid(model, x)
        assert nxt == forecast_one(linear, x)

    def test_mode1_last_column_learner_returns_linear_forecast(self):
        x = ar1(300, seed=2)
        linear = fit_arima(x[:250], **LIN)
        spec = HybridSpec("svm", "arima", 1, lag_n=4)
        model = HybridModel(spec=spec, linear=linear,
                            nonlinear=LastColumnLearner())
        targets = np.arange(250, 300)
        got = forecast_hybrid_many(model, x, targets)
        fitted, _ = one_step_series(linear, x)
        assert np.array_equal(got, fitted[targets])

    def test_mode1_prediction_rows(self):
        x = ar1(300, seed=3)
        linear = fit_arima(x[:250], **LIN)
        spec = HybridSpec("svm", "arima", 1, lag_n=3)
        rec = Recorder()
        model = HybridModel(spec=spec, linear=linear, nonlinear=rec)
        t = 260
        forecast_hybrid_many(model, x, np.array([t]))
        fitted, _ = one_step_series(linear, x)
        want = [x[t - 1], x[t - 2], x[t - 3], fitted[t]]
        assert rec.pred_X[0].tolist() == want

    def test_mode2_prediction_rows_are_residual_lags(self):
        x = ar1(300, seed=4)
        linear = fit_arima(x[:250], **LIN)
        spec = HybridSpec("svm", "arima", 2, lag_n=3)
        rec = Recorder()
        model = HybridModel(spec=spec, linear=linear, nonlinear=rec)
        t = 260
        forecast_hybrid_many(model, x, np.array([t]))
        _, resid = one_step_series(linear, x)
        want = [resid[t - 1], resid[t - 2], resid[t - 3]]
        assert rec.pred_X[0].tolist() == want

    def test_mode1_lstm_sequence_rows(self):
        x = ar1(300, seed=5)
        linear = fit_arima(x[:250], **LIN)
        spec = HybridSpec("lstm", "arima", 1)
        rec = Recorder(sequence_length=4)
        model = HybridModel(spec=spec, linear=linear, nonlinear=rec)
        t = 260
        forecast_hybrid_many(model, x, np.array([t]))
        fitted, _ = one_step_series(linear, x)
        seq = rec.pred_X[0]
        assert seq.shape == (4, 2)
        assert seq[:, 0].tolist() == x[t - 4:t].tolist()
        assert seq[:, 1].tolist() == fitted[t - 3:t + 1].tolist()

    def test_mode1_forecast_depends_only_on_linear_outputs(self):
        x = ar1(300, seed=6)
        spec = HybridSpec("svm", "arima", 1, lag_n=4, linear_params=LIN)
        m1 = fit_hybrid(spec, x[:250], seed=0)
        clone = dataclasses.replace(m1.linear)
        m2 = HybridModel(spec=spec, linear=clone, nonlinear=m1.nonlinear)
        targets = np.arange(250, 300)
        a = forecast_hybrid_many(m1, x, targets)
        b = forecast_hybrid_many(m2, x, targets)
        assert np.array_equal(a, b)


class TestFitWiring:
    def _patched(self, monkeypatch, rec):
        monkeypatch.setattr(hybrid_mod, "make_learner",
                            lambda kind, params, seed: rec)

    def test_mode1_training_matrix(self, monkeypatch):
        x = ar1(120, seed=7)
        rec = Recorder()
        self._patched(monkeypatch, rec)
        spec = HybridSpec("svm", "arima", 1, lag_n=3, linear_params=LIN)
        model = fit_hybrid(spec, x, seed=0)
        fitted, _ = one_step_series(model.linear, x)
        head = int(np.argmax(np.isfinite(fitted)))
        first = max(3, head)
        assert rec.X.shape == (len(x) - first, 4)
        for k, t in enumerate(range(first, len(x))):
            assert rec.X[k].tolist() == [x[t - 1], x[t - 2], x[t - 3],
                                         fitted[t]]
            assert rec.y[k] == x[t]

    def test_mode2_training_matrix(self, monkeypatch):
        x = ar1(120, seed=8)
        rec = Recorder()
        self._patched(monkeypatch, rec)
        spec = HybridSpec("svm", "arima", 2, lag_n=3, linear_params=LIN)
        model = fit_hybrid(spec, x, seed=0)
        _, resid = one_step_series(model.linear, x)
        head = int(np.argmax(np.isfinite(resid)))
        sub = resid[head:]
        for k, t in enumerate(range(3, len(sub))):
            assert rec.X[k].tolist() == [sub[t - 1], sub[t - 2], sub[t - 3]]
            assert rec.y[k] == sub[t]

    def test_mode1_lstm_training_rows(self, monkeypatch):
        x = ar1(120, seed=9)
        rec = Recorder(sequence_length=5)
        self._patched(monkeypatch, rec)
        spec = HybridSpec("lstm", "arima", 1, linear_params=LIN)
        model = fit_hybrid(spec, x, seed=0)
        fitted, _ = one_step_series(model.linear, x)
        head = int(np.argmax(np.isfinite(fitted)))
        j0 = max(head, 1)
        assert rec.X[:, 0].tolist() == x[j0 - 1:len(x) - 1].tolist()
        assert rec.X[:, 1].tolist() == fitted[j0:].tolist()
        assert rec.y.tolist() == x[j0:].tolist()


class TestForecastBehavior:
    def test_mode2_decomposition_identity(self):
        x = ar1(400, seed=10)
        spec = HybridSpec("xgboost", "arima", 2, lag_n=5, linear_params=LIN)
        model = fit_hybrid(spec, x, seed=0)
        fitted, resid = one_step_series(model.linear, x)
        ok = np.isfinite(fitted)
        assert np.max(np.abs(fitted[ok] + resid[ok] - x[ok])) < 1e-12

    @pytest.mark.parametrize("kind", ["svm", "xgboost", "lstm"])
    @pytest.mark.parametrize("mode", [1, 2])
    def test_batch_matches_single_and_is_finite(self, kind, mode):
        x = ar1(360, seed=11)
        lp = ({"sequence_length": 6, "hidden_size": 4, "epochs": 3}
              if kind == "lstm" else {})
        spec = HybridSpec(kind, "arima", mode, lag_n=4, learner_params=lp,
                          linear_params=LIN)
        model = fit_hybrid(spec, x[:330], seed=1)
        targets = np.arange(330, 360)
        batch = forecast_hybrid_many(model, x, targets)
        assert np.all(np.isfinite(batch))
        single = forecast_hybrid(model, x[:330])
        assert batch[0] == pytest.approx(single, abs=1e-12)

    def test_too_short_history(self):
        x = ar1(360, seed=12)
        spec = HybridSpec("svm", "arima", 2, lag_n=8, linear_params=LIN)
        model = fit_hybrid(spec, x[:330], seed=1)
        with pytest.raises(TooShort):
            forecast_hybrid(model, x[:4])

    def test_arfima_linear_component(self):
        x = ar1(420, seed=13)
        spec = HybridSpec("svm", "arfima", 2, lag_n=4,
                          linear_params={"max_p": 1, "max_q": 0,
                                         "d_grid": [-0.1, 0.0, 0.1],
                                         "refine": False})
        model = fit_hybrid(spec, x[:400], seed=0)
        out = forecast_hybrid_many(model, x, np.arange(400, 420))
        assert np.all(np.isfinite(out))
        assert model.linear.kind == "arfima"


class TestDerivedOracles:
    def test_mode2_learner_is_quiet_on_white_residuals(self):
        # pure AR(1): the linear part explains everything, so the
        # residual learner should add almost nothing out of sample
        lin = {"max_p": 2, "max_q": 1}
        for seed in range(5):
            rng = np.random.default_rng(100 + seed)
            x = np.zeros(1050)
            for t in range(1, len(x)):
                x[t] = 0.6 * x[t - 1] + rng.normal(0, 0.01)
            spec = HybridSpec("svm", "arima", 2, lag_n=5,
                              learner_params={"C": 1e-4, "epsilon": 1e-3,
                                              "kernel": "linear"},
                              linear_params=lin)
            model = fit_hybrid(spec, x[:1000], seed=0)
            targets = np.arange(1000, 1050)
            hy = forecast_hybrid_many(model, x, targets)
            fitted, resid = one_step_series(model.linear, x)
            nhat = hy - fitted[targets]
            sigma = np.nanstd(resid[:1000])
            assert np.max(np.abs(nhat)) < 0.1 * sigma

    def test_mode2_beats_linear_on_composite_process(self):
        # innovations follow a strong nonlinear autoregression with
        # amplitude 3x the noise scale; averaged over 10 seeds the
        # hybrid must not lose to its linear component
        lin = {"max_p": 2, "max_q": 1}
        lin_rmse, hyb_rmse = [], []
        for seed in range(10):
            rng = np.random.default_rng(7000 + seed)
            n, sigma = 500, 0.01
            amp = 3 * sigma
            u = np.zeros(n)
            y = np.zeros(n)
            for t in range(1, n):
                u[t] = amp * np.sin(u[t - 1] / sigma) + rng.normal(0, sigma)
                y[t] = 0.5 * y[t - 1] + u[t]
            linear = fit_arima(y[:400], **lin)
            spec = HybridSpec("xgboost", "arima", 2, lag_n=5,
                              learner_params={"n_estimators": 100,
                                              "max_depth": 2,
                                              "learning_rate": 0.1},
                              linear_params=lin)
            model = fit_hybrid(spec, y[:400], seed=0, linear=linear)
            targets = np.arange(400, 500)
            fitted, _ = one_step_series(linear, y)
            lpred = fitted[targets]
            hpred = forecast_hybrid_many(model, y, targets)
            lin_rmse.append(float(np.sqrt(np.mean((lpred - y[targets]) ** 2))))
            hyb_rmse.append(float(np.sqrt(np.mean((hpred - y[targets]) ** 2))))
        assert np.mean(hyb_rmse) <= np.mean(lin_rmse)
