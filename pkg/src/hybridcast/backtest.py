"""Trading simulation on top of forecast series.

Forecasted log returns are thresholded into {-1, 0, +1} signals at the
transaction-cost level c: only moves expected to out-earn the cost trigger
a trade. A signal dated t was computable at the close of day t-1, so the
position it implies is held during day t and any position change is charged
at day t's open. The daily strategy return is therefore

    ret_t = pos_t * r_t - tc * |pos_t - pos_{t-1}|

with r_t the asset's simple return and pos_0 compared against a flat book.
Equity compounds multiplicatively from 1.0. Long-short strategies hold the
signal's position and keep it through zero-signal days; long-only books
clamp shorts to flat, so a sell signal only ever closes an open long.

Performance indicators: annualized compound return (ARC, 365.25-day years),
annualized standard deviation (ASD, sqrt(T) scaling), maximum drawdown (MD),
and the ratios ARC/ASD, ARC^2*sign(ARC)/(ASD*MD), and ARC over annualized
downside deviation. Ratios with non-positive denominators are reported as
0.0 and flagged as degenerate rather than raised.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, MisalignedSeries, TooShort
from .timeseries import ReturnSeries

LONG_SHORT = "long_short"
LONG_ONLY = "long_only"

_MODES = (LONG_SHORT, LONG_ONLY)


@dataclass(frozen=True)
class SignalSeries:
    """Dated trade signals, one of -1, 0, +1 per forecast day."""

    dates: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        values = np.asarray(self.values, dtype=np.int8)
        if dates.shape != values.shape or dates.ndim != 1:
            raise LengthMismatch("signal dates and values must align 1-d")
        if len(dates) > 1 and not np.all(dates[1:] > dates[:-1]):
            raise MisalignedSeries("signal dates must strictly increase")
        if not np.all(np.isin(values, (-1, 0, 1))):
            raise ValueError("signals must be -1, 0 or +1")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class StrategyConfig:
    mode: str = LONG_SHORT
    tc: float = 0.0
    trading_days: int = 252

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}")
        if not 0.0 <= self.tc < 1.0:
            raise ValueError("transaction cost must lie in [0, 1)")
        if self.trading_days < 1:
            raise ValueError("trading_days must be positive")


@dataclass(frozen=True)
class Trade:
    date: np.datetime64
    before: int
    after: int
    cost: float  # currency, charged against equity at the open


@dataclass(frozen=True)
class PerformanceMetrics:
    arc: float
    asd: float
    md: float
    ir: float
    ir_star: float
    sr: float
    degenerate: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {"arc": self.arc, "asd": self.asd, "md": self.md,
                "ir": self.ir, "ir_star": self.ir_star, "sr": self.sr}


@dataclass(frozen=True)
class BacktestResult:
    dates: np.ndarray
    positions: np.ndarray
    returns: np.ndarray  # daily strategy returns, costs included
    equity: np.ndarray
    trades: tuple[Trade, ...]
    metrics: PerformanceMetrics


def signals(forecasts, tc: float) -> np.ndarray:
    """Threshold forecasts at the cost level into -1 / 0 / +1."""
    if tc < 0:
        raise ValueError("transaction cost must be non-negative")
    f = np.asarray(forecasts, dtype=np.float64)
    out = np.zeros(f.shape, dtype=np.int8)
    out[f > tc] = 1
    out[f < -tc] = -1
    return out


def make_signals(dates, forecasts, tc: float) -> SignalSeries:
    return SignalSeries(dates=dates, values=signals(forecasts, tc))


def resolve_positions(signal_values, long_only: bool = False) -> np.ndarray:
    """Turn signals into held positions: act on nonzero, otherwise hold."""
    sig = np.asarray(signal_values)
    out = np.empty(len(sig), dtype=np.int8)
    pos = 0
    for i, s in enumerate(sig):
        if s != 0:
            pos = int(s)
        out[i] = max(pos, 0) if long_only else pos
    return out


def rmse(pred, actual) -> float:
    pred, actual = _paired(pred, actual)
    return float(np.sqrt(np.mean((pred - actual) ** 2)))


def mae(pred, actual) -> float:
    pred, actual = _paired(pred, actual)
    return float(np.mean(np.abs(pred - actual)))


def _paired(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or len(a) == 0:
        raise LengthMismatch("paired series must be equally long and 1-d")
    return a, b


def arc(dates, equity) -> float:
    """Compound annual growth from 1.0 to the final equity level."""
    dates = np.asarray(dates, dtype="datetime64[D]")
    equity = np.asarray(equity, dtype=np.float64)
    if len(equity) < 2:
        raise TooShort("annualized return needs at least two days")
    # the first return day already spans one day of holding
    days = float((dates[-1] - dates[0]) / np.timedelta64(1, "D")) + 1.0
    years = days / 365.25
    return float(equity[-1] ** (1.0 / years) - 1.0)


def asd(returns, trading_days: int) -> float:
    returns = np.asarray(returns, dtype=np.float64)
    if len(returns) < 2:
        raise TooShort("annualized deviation needs at least two days")
    return float(np.sqrt(trading_days) * np.std(returns, ddof=1))


def downside_std(returns, trading_days: int) -> float:
    """Annualized sample deviation over losing days only; 0 if under two."""
    returns = np.asarray(returns, dtype=np.float64)
    neg = returns[returns < 0]
    if len(neg) < 2:
        return 0.0
    return float(np.sqrt(trading_days) * np.std(neg, ddof=1))


def max_drawdown(equity) -> float:
    """Largest peak-to-trough loss fraction, the 1.0 start included."""
    equity = np.asarray(equity, dtype=np.float64)
    peaks = np.maximum.accumulate(np.concatenate(([1.0], equity)))
    dd = (peaks[1:] - equity) / peaks[1:]
    return float(dd.max(initial=0.0))


def ir(arc_val: float, asd_val: float) -> float:
    return arc_val / asd_val if asd_val > 0 else 0.0


def ir_star(arc_val: float, asd_val: float, md_val: float) -> float:
    denom = asd_val * md_val
    return arc_val * abs(arc_val) / denom if denom > 0 else 0.0


def sortino(arc_val: float, downside: float) -> float:
    return arc_val / downside if downside > 0 else 0.0


def compute_metrics(dates, returns, equity,
                    trading_days: int) -> PerformanceMetrics:
    a = arc(dates, equity)
    s = asd(returns, trading_days)
    md = max_drawdown(equity)
    dstd = downside_std(returns, trading_days)
    degenerate = []
    if s <= 0:
        degenerate.append("ir")
    if s * md <= 0:
        degenerate.append("ir_star")
    if dstd <= 0:
        degenerate.append("sr")
    return PerformanceMetrics(arc=a, asd=s, md=md, ir=ir(a, s),
                              ir_star=ir_star(a, s, md),
                              sr=sortino(a, dstd),
                              degenerate=tuple(degenerate))


def _align(asset: ReturnSeries, dates: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(asset.dates, dates)
    if idx.max(initial=0) >= len(asset.dates) or not np.array_equal(
            asset.dates[idx], dates):
        raise MisalignedSeries("signal dates missing from the asset series")
    return idx


def run_strategy(asset: ReturnSeries, sig: SignalSeries,
                 cfg: StrategyConfig) -> BacktestResult:
    """Simulate one strategy; asset values must be simple daily returns."""
    if len(sig) < 2:
        raise TooShort("a backtest needs at least two signal days")
    idx = _align(asset, sig.dates)
    r = asset.values[idx]
    pos = resolve_positions(sig.values, long_only=cfg.mode == LONG_ONLY)
    prev = np.concatenate(([0], pos[:-1])).astype(np.int8)
    delta = np.abs(pos - prev)
    strat = pos * r - cfg.tc * delta
    equity = np.cumprod(1.0 + strat)
    trades = []
    for i in np.flatnonzero(delta):
        base = equity[i - 1] if i > 0 else 1.0
        trades.append(Trade(date=sig.dates[i], before=int(prev[i]),
                            after=int(pos[i]),
                            cost=float(cfg.tc * delta[i] * base)))
    metrics = compute_metrics(sig.dates, strat, equity, cfg.trading_days)
    return BacktestResult(dates=sig.dates, positions=pos, returns=strat,
                          equity=equity, trades=tuple(trades),
                          metrics=metrics)


def buy_and_hold(asset: ReturnSeries, trading_days: int) -> BacktestResult:
    """Benchmark book: fully long every day, no costs charged."""
    if len(asset.values) < 2:
        raise TooShort("a backtest needs at least two days")
    equity = np.cumprod(1.0 + asset.values)
    metrics = compute_metrics(asset.dates, asset.values, equity, trading_days)
    return BacktestResult(dates=asset.dates,
                          positions=np.ones(len(asset.values), dtype=np.int8),
                          returns=asset.values.copy(), equity=equity,
                          trades=(), metrics=metrics)


def portfolio(a: BacktestResult, b: BacktestResult) -> BacktestResult:
    """Equal-weight daily-rebalanced blend of two strategies.

    Returns are averaged on the date intersection and the indicators are
    recomputed there with a 365-day year, the calendar of the blend.
    """
    common, ia, ib = np.intersect1d(a.dates, b.dates, return_indices=True)
    if len(common) < 2:
        raise MisalignedSeries("strategies share fewer than two dates")
    ret = 0.5 * (a.returns[ia] + b.returns[ib])
    equity = np.cumprod(1.0 + ret)
    metrics = compute_metrics(common, ret, equity, trading_days=365)
    return BacktestResult(dates=common,
                          positions=np.zeros(len(common), dtype=np.int8),
                          returns=ret, equity=equity, trades=(),
                          metrics=metrics)
