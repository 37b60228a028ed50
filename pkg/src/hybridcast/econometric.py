"""Conditional-sum-of-squares ARIMA and ARFIMA estimation.

Model convention (on the working series x after differencing and demeaning):

    x_t = sum_i phi_i x_{t-i} + e_t + sum_j theta_j e_{t-j}

Residuals are computed with zero-initialized pre-sample values and errors;
the first max(p, q) residuals are treated as warm-up and excluded from the
objective. Order selection minimizes AIC = n*ln(sigma2) + 2*(p + q + 1) over
a bounded grid, scanned in a fixed order so ties are broken deterministically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, signal

from .errors import NonConvergent, TooShort
from .fracdiff import difference, frac_diff_weights, frac_difference

__all__ = [
    "ArimaOrder",
    "FittedLinearModel",
    "fit_arima",
    "fit_arfima",
    "forecast_one",
    "one_step_series",
]

# smallest training length accepted by the fitters, post-differencing
MIN_FIT_LENGTH = 50

# fractional truncation depth; d == 0 keeps the series untouched
FRAC_TRUNC = 100

# optimizer keeps MA roots beyond this radius; acceptance is strict (> 1)
_MA_ROOT_MARGIN = 1.001


@dataclass(frozen=True)
class ArimaOrder:
    p: int
    d: int
    q: int

    def __post_init__(self):
        if self.p < 0 or self.q < 0:
            raise ValueError("p and q must be non-negative")
        if not 0 <= self.d <= 2:
            raise ValueError("integer differencing order must be in [0, 2]")


@dataclass(frozen=True)
class FittedLinearModel:
    """Frozen result of a CSS fit; everything a forecast needs."""

    kind: str  # "arima" | "arfima"
    order: ArimaOrder
    frac_d: float  # 0.0 for ARIMA
    trunc: int  # fractional truncation depth actually applied
    mu: float  # mean of the working series
    phi: np.ndarray
    theta: np.ndarray
    sigma2: float
    aic: float
    resid: np.ndarray  # training residuals, warm-up excluded
    nobs: int  # residual count entering the objective

    def __post_init__(self):
        object.__setattr__(self, "phi", np.asarray(self.phi, dtype=np.float64))
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=np.float64))

    @property
    def warmup(self) -> int:
        return max(self.order.p, self.order.q)

    @property
    def min_history(self) -> int:
        """Fewest raw observations forecast_one accepts."""
        return self.trunc + self.order.d + max(self.order.p, self.order.q, 1)


def _transform(kind: str, values: np.ndarray, d_int: int, frac_d: float,
               trunc: int) -> np.ndarray:
    if kind == "arima":
        return difference(values, d_int)
    if frac_d == 0.0 or trunc == 0:
        return np.asarray(values, dtype=np.float64)
    return frac_difference(values, frac_d, trunc)


def _css_residuals(x: np.ndarray, phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Full-length residual series with zero-initialized pre-sample state."""
    z = np.array(x, dtype=np.float64, copy=True)
    for i in range(1, len(phi) + 1):
        z[i:] -= phi[i - 1] * x[:-i]
    if len(theta):
        # e_t + theta_1 e_{t-1} + ... = z_t is an IIR filter in e
        e = signal.lfilter([1.0], np.r_[1.0, theta], z)
    else:
        e = z
    return e


def _ma_root_shortfall(theta: np.ndarray, margin: float) -> float:
    """How far MA roots fall inside the required radius (0 when compliant)."""
    q = len(theta)
    if q == 0:
        return 0.0
    if not np.all(np.isfinite(theta)):
        return float("inf")
    if q == 1:
        # root of 1 + theta*z is -1/theta
        r = float("inf") if theta[0] == 0.0 else 1.0 / abs(theta[0])
        return max(0.0, margin - r)
    roots = np.roots(np.r_[theta[::-1], 1.0])
    if len(roots) == 0:
        return 0.0
    return float(np.sum(np.maximum(0.0, margin - np.abs(roots))))


def _css_objective(params: np.ndarray, x: np.ndarray, p: int, q: int,
                   warm: int) -> float:
    if not np.all(np.isfinite(params)) or np.any(np.abs(params) > 50.0):
        return float("inf")
    phi, theta = params[:p], params[p:]
    e = _css_residuals(x, phi, theta)
    sse = float(np.dot(e[warm:], e[warm:]))
    if not math.isfinite(sse):
        return float("inf")
    viol = _ma_root_shortfall(theta, _MA_ROOT_MARGIN)
    if viol > 0.0:
        sse = sse * (1.0 + 1e3 * viol) + 1e3 * viol
    return sse


def _ols(y: np.ndarray, X: np.ndarray) -> np.ndarray:
    coef, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
    return coef


def _lag_matrix(x: np.ndarray, lags: int, start: int) -> np.ndarray:
    """Columns x_{t-1}..x_{t-lags} for t = start..len(x)-1."""
    return np.column_stack([x[start - i:len(x) - i] for i in range(1, lags + 1)])


def _long_ar_innovations(x: np.ndarray, max_pq: int) -> np.ndarray:
    """Residuals of a long AR fit, shared start values for every (p, q) cell."""
    m = len(x)
    long_p = min(max(10, 2 * max_pq), max(m // 4, 1))
    e = np.zeros(m)
    if 0 < long_p < m:
        X = _lag_matrix(x, long_p, long_p)
        a = _ols(x[long_p:], X)
        e[long_p:] = x[long_p:] - X @ a
    return e


def _hr_init(x: np.ndarray, e_long: np.ndarray, p: int, q: int) -> np.ndarray:
    """Hannan-Rissanen second-stage OLS start values for (phi, theta)."""
    m = len(x)
    start = max(p, q, min(max(10, 2 * (p + q)), max(m // 4, 1)))
    if start >= m - (p + q + 2):
        return np.zeros(p + q)
    cols = []
    if p:
        cols.append(_lag_matrix(x, p, start))
    if q:
        cols.append(_lag_matrix(e_long, q, start))
    coef = _ols(x[start:], np.column_stack(cols))
    if not np.all(np.isfinite(coef)):
        return np.zeros(p + q)
    phi, theta = coef[:p], coef[p:]
    for _ in range(60):
        if _ma_root_shortfall(theta, _MA_ROOT_MARGIN) == 0.0:
            break
        theta = theta * 0.9
    return np.r_[phi, theta]


def _fit_order(x: np.ndarray, p: int, q: int, e_long: np.ndarray):
    """CSS fit of ARMA(p, q) on a demeaned series: (phi, theta, resid, sse)."""
    m = len(x)
    warm = max(p, q)
    if m - warm < 10:
        return None
    if p == 0 and q == 0:
        return np.empty(0), np.empty(0), x.copy(), float(np.dot(x, x))
    if q == 0:
        # pure AR: the CSS objective is exactly least squares on the lag matrix
        X = _lag_matrix(x, p, p)
        phi = _ols(x[p:], X)
        if not np.all(np.isfinite(phi)):
            return None
        e = _css_residuals(x, phi, np.empty(0))
        return phi, np.empty(0), e[warm:], float(np.dot(e[warm:], e[warm:]))

    starts = [_hr_init(x, e_long, p, q)]
    if np.any(starts[0]):
        starts.append(np.zeros(p + q))
    budget = min(400 * (p + q), 2400)
    best = None
    for x0 in starts:
        res = optimize.minimize(
            _css_objective,
            x0,
            args=(x, p, q, warm),
            method="Nelder-Mead",
            options={"xatol": 1e-6, "fatol": 1e-10,
                     "maxiter": budget, "maxfev": budget},
        )
        if math.isfinite(res.fun) and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        return None
    phi, theta = best.x[:p].copy(), best.x[p:].copy()
    # hard invertibility: shrink toward zero if the penalty left roots inside
    for _ in range(60):
        if _ma_root_shortfall(theta, 1.0) == 0.0:
            break
        theta = theta * 0.98
    else:
        return None
    e = _css_residuals(x, phi, theta)
    sse = float(np.dot(e[warm:], e[warm:]))
    if not math.isfinite(sse):
        return None
    return phi, theta, e[warm:], sse


def _aic(sse: float, nobs: int, p: int, q: int) -> float:
    if nobs <= 0 or sse <= 0.0 or not math.isfinite(sse):
        return float("inf")
    return nobs * math.log(sse / nobs) + 2.0 * (p + q + 1.0)


def _scan_pq(x: np.ndarray, max_p: int, max_q: int, scale: float = 1.0):
    """Best-AIC ARMA fit over the (p, q) grid; fixed scan order breaks ties."""
    # a (near-)constant working series carries no signal: reject it rather
    # than letting float noise from the demeaning masquerade as variance
    if float(np.max(np.abs(x), initial=0.0)) <= 1e-12 * max(1.0, abs(scale)):
        return None
    e_long = _long_ar_innovations(x, max_p + max_q)
    best = None
    for p in range(max_p + 1):
        for q in range(max_q + 1):
            fit = _fit_order(x, p, q, e_long)
            if fit is None:
                continue
            phi, theta, resid, sse = fit
            nobs = len(x) - max(p, q)
            aic = _aic(sse, nobs, p, q)
            if not math.isfinite(aic):
                continue
            if best is None or aic < best["aic"]:
                best = {
                    "p": p, "q": q, "phi": phi, "theta": theta,
                    "resid": resid, "sse": sse, "nobs": nobs, "aic": aic,
                }
    return best


def _values_of(series) -> np.ndarray:
    return np.asarray(getattr(series, "values", series), dtype=np.float64)


def fit_arima(series, max_p: int = 5, max_d: int = 1,
              max_q: int = 5) -> FittedLinearModel:
    """Grid-search ARIMA fit by CSS, orders selected by AIC.

    The series is differenced d times, demeaned by its training mean, and the
    ARMA coefficients minimize the conditional sum of squares. Scan order is
    d, then p, then q, ascending; ties keep the first candidate.
    """
    values = _values_of(series)
    if len(values) < MIN_FIT_LENGTH:
        raise TooShort(
            f"need at least {MIN_FIT_LENGTH} observations, got {len(values)}"
        )
    best = None
    for d in range(max_d + 1):
        w = difference(values, d)
        mu = float(np.mean(w))
        cand = _scan_pq(w - mu, max_p, max_q, scale=mu)
        if cand is None:
            continue
        if best is None or cand["aic"] < best["aic"]:
            best = dict(cand, d=d, mu=mu)
    if best is None:
        raise NonConvergent("no ARIMA candidate produced a finite objective")
    return FittedLinearModel(
        kind="arima",
        order=ArimaOrder(best["p"], best["d"], best["q"]),
        frac_d=0.0,
        trunc=0,
        mu=best["mu"],
        phi=best["phi"],
        theta=best["theta"],
        sigma2=best["sse"] / best["nobs"],
        aic=best["aic"],
        resid=best["resid"],
        nobs=best["nobs"],
    )


def _default_d_grid() -> np.ndarray:
    # 0.05 steps strictly inside (-0.45, 0.45)
    return np.round(np.arange(-0.40, 0.4001, 0.05), 10)


def _arfima_at_d(values: np.ndarray, d: float, max_p: int, max_q: int):
    trunc = 0 if d == 0.0 else FRAC_TRUNC
    if len(values) - trunc < MIN_FIT_LENGTH:
        raise TooShort(
            f"need at least {trunc + MIN_FIT_LENGTH} observations for "
            f"fractional truncation {trunc}, got {len(values)}"
        )
    w = _transform("arfima", values, 0, d, trunc)
    mu = float(np.mean(w))
    cand = _scan_pq(w - mu, max_p, max_q, scale=mu)
    if cand is None:
        return None
    return dict(cand, frac_d=float(d), trunc=trunc, mu=mu)


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_refine(values, lo, hi, max_p, max_q, best, tol=0.005, max_iter=16):
    """Golden-section search for d on the best-AIC-over-(p, q) objective."""
    cache: dict[float, dict | None] = {}

    def eval_d(d: float):
        d = round(d, 12)
        if d not in cache:
            try:
                cache[d] = _arfima_at_d(values, d, max_p, max_q)
            except TooShort:
                cache[d] = None
        return cache[d]

    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    m = a + _GOLDEN * (b - a)
    fc, fm = eval_d(c), eval_d(m)
    for _ in range(max_iter):
        if b - a < tol:
            break
        fc_aic = fc["aic"] if fc else float("inf")
        fm_aic = fm["aic"] if fm else float("inf")
        if fc_aic < fm_aic:
            b, m, fm = m, c, fc
            c = b - _GOLDEN * (b - a)
            fc = eval_d(c)
        else:
            a, c, fc = c, m, fm
            m = a + _GOLDEN * (b - a)
            fm = eval_d(m)
    for cand in cache.values():
        if cand is not None and cand["aic"] < best["aic"]:
            best = cand
    return best


def fit_arfima(series, max_p: int = 5, max_q: int = 5,
               d_grid=None, refine: bool = True) -> FittedLinearModel:
    """ARFIMA fit: grid over the fractional order, CSS ARMA at each d.

    The best grid cell is refined by golden-section search on the same
    AIC-over-(p, q) objective. d = 0 applies no truncation, so a degenerate
    grid {0} reproduces the ARIMA fit with d = 0 exactly.
    """
    values = _values_of(series)
    grid = (_default_d_grid() if d_grid is None
            else np.asarray(d_grid, dtype=np.float64))
    if len(grid) == 0:
        raise ValueError("d_grid must be non-empty")
    best = None
    for d in grid:
        cand = _arfima_at_d(values, float(d), max_p, max_q)
        if cand is None:
            continue
        if best is None or cand["aic"] < best["aic"]:
            best = cand
    if best is None:
        raise NonConvergent("no ARFIMA candidate produced a finite objective")

    if refine and len(grid) > 1:
        step = float(np.min(np.diff(np.sort(grid))))
        lo = max(best["frac_d"] - step, -0.449)
        hi = min(best["frac_d"] + step, 0.449)
        best = _golden_refine(values, lo, hi, max_p, max_q, best)

    return FittedLinearModel(
        kind="arfima",
        order=ArimaOrder(best["p"], 0, best["q"]),
        frac_d=best["frac_d"],
        trunc=best["trunc"],
        mu=best["mu"],
        phi=best["phi"],
        theta=best["theta"],
        sigma2=best["sse"] / best["nobs"],
        aic=best["aic"],
        resid=best["resid"],
        nobs=best["nobs"],
    )


def one_step_series(model: FittedLinearModel, series) -> tuple[np.ndarray, np.ndarray]:
    """One-step-ahead fitted values and residuals over a whole series.

    Both arrays align index-for-index with the input; the first d + trunc
    entries (where the transform is undefined) are NaN. Run over the model's
    own training series this reproduces the stored residuals exactly, and
    entries beyond the training span are genuine one-step-ahead forecasts,
    because the recursion only looks backward.
    """
    values = _values_of(series)
    offset = model.order.d + model.trunc
    if len(values) <= offset + model.warmup:
        raise TooShort("series shorter than the model's transform needs")
    w = _transform(model.kind, values, model.order.d, model.frac_d, model.trunc)
    e = _css_residuals(w - model.mu, model.phi, model.theta)
    fitted = np.full(len(values), np.nan)
    resid = np.full(len(values), np.nan)
    # fitted value in the raw scale: actual minus residual
    fitted[offset:] = values[offset:] - e
    resid[offset:] = e
    return fitted, resid


def forecast_one(model: FittedLinearModel, history) -> float:
    """Forecast the next value given the history the model was trained on.

    The residual recursion is re-run over the supplied history with the
    frozen coefficients, so feeding the training series without its last
    point reproduces the last in-sample fitted value exactly.
    """
    values = _values_of(history)
    if len(values) < model.min_history:
        raise TooShort(
            f"need at least {model.min_history} observations, got {len(values)}"
        )
    w = _transform(model.kind, values, model.order.d, model.frac_d, model.trunc)
    x = w - model.mu
    e = _css_residuals(x, model.phi, model.theta)
    m = len(x)
    x_next = 0.0
    for i in range(1, model.order.p + 1):
        x_next += model.phi[i - 1] * x[m - i]
    for j in range(1, model.order.q + 1):
        x_next += model.theta[j - 1] * e[m - j]
    w_next = x_next + model.mu
    if model.kind == "arima":
        d = model.order.d
        if d == 0:
            return float(w_next)
        if d == 1:
            return float(values[-1] + w_next)
        return float(2.0 * values[-1] - values[-2] + w_next)
    if model.trunc == 0:
        return float(w_next)
    fw = frac_diff_weights(model.frac_d, model.trunc).weights
    tail = values[-model.trunc:][::-1]  # y_{n-1}, y_{n-2}, ..., y_{n-K}
    return float(w_next - np.dot(fw[1:], tail))
