"""Shared fixtures and simulation helpers for the test suite."""
from __future__ import annotations

import datetime as dt

import numpy as np
import pytest

from hybridcast.timeseries import PriceSeries, ReturnSeries


def simulate_arma(n: int, phi=(), theta=(), mu: float = 0.0, sigma: float = 1.0,
                  seed: int = 0, burn: int = 300) -> np.ndarray:
    """Simulate x_t = mu + sum phi_i (x_{t-i} - mu) + e_t + sum theta_j e_{t-j}."""
    phi = np.asarray(phi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    rng = np.random.default_rng(seed)
    total = n + burn
    e = rng.normal(0.0, sigma, total)
    x = np.zeros(total)
    p, q = len(phi), len(theta)
    for t in range(total):
        ar = sum(phi[i] * x[t - 1 - i] for i in range(p) if t - 1 - i >= 0)
        ma = sum(theta[j] * e[t - 1 - j] for j in range(q) if t - 1 - j >= 0)
        x[t] = ar + e[t] + ma
    return mu + x[burn:]


def simulate_frac_noise(n: int, d: float, sigma: float = 1.0, seed: int = 0,
                        gen_trunc: int = 500) -> np.ndarray:
    """(1 - B)^d x_t = e_t, generated by the inverse operator's expansion."""
    rng = np.random.default_rng(seed)
    e = rng.normal(0.0, sigma, n + gen_trunc)
    # weights of (1 - B)^{-d}
    w = np.empty(gen_trunc + 1)
    w[0] = 1.0
    for k in range(1, gen_trunc + 1):
        w[k] = w[k - 1] * (d + k - 1.0) / k
    x = np.convolve(e, w, mode="valid")
    return x[-n:]


def weekday_dates(start: dt.date, count: int) -> np.ndarray:
    """The first `count` Mon-Fri dates from `start` onward."""
    out = []
    day = start
    while len(out) < count:
        if day.weekday() < 5:
            out.append(day)
        day += dt.timedelta(days=1)
    return np.array(out, dtype="datetime64[D]")


def daily_dates(start: dt.date, count: int) -> np.ndarray:
    d0 = np.datetime64(start, "D")
    return d0 + np.arange(count)


def make_price_series(values, start=dt.date(2020, 1, 1), calendar="daily") -> PriceSeries:
    values = np.asarray(values, dtype=float)
    dates = (daily_dates(start, len(values)) if calendar == "daily"
             else weekday_dates(start, len(values)))
    return PriceSeries(dates, values)


def make_return_series(values, start=dt.date(2020, 1, 1), calendar="daily") -> ReturnSeries:
    values = np.asarray(values, dtype=float)
    dates = (daily_dates(start, len(values)) if calendar == "daily"
             else weekday_dates(start, len(values)))
    return ReturnSeries(dates, values)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
