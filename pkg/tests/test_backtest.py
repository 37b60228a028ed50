"""Signals, position accounting, indicators, and portfolio blending."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridcast.backtest import (
    BacktestResult,
    SignalSeries,
    StrategyConfig,
    arc,
    asd,
    buy_and_hold,
    compute_metrics,
    downside_std,
    ir,
    ir_star,
    mae,
    make_signals,
    max_drawdown,
    portfolio,
    resolve_positions,
    rmse,
    run_strategy,
    signals,
    sortino,
)
from hybridcast.errors import LengthMismatch, MisalignedSeries, TooShort
from hybridcast.timeseries import ReturnSeries


def days(start, n):
    return np.arange(np.datetime64(start), np.datetime64(start) + n)


def series(values, start="2020-01-01"):
    values = np.asarray(values, dtype=float)
    return ReturnSeries(dates=days(start, len(values)), values=values)


def sig(values, start="2020-01-01"):
    return SignalSeries(dates=days(start, len(values)), values=values)


class TestSignals:
    def test_threshold_cases(self):
        out = signals([0.0002, 0.00004, -0.00004, -0.0002, 0.00005],
                      tc=0.00005)
        assert out.tolist() == [1, 0, 0, -1, 0]

    def test_boundary_is_flat(self):
        # a forecast exactly at the cost level does not trade
        assert signals([0.001, -0.001], tc=0.001).tolist() == [0, 0]

    def test_zero_cost_keeps_sign(self):
        out = signals([0.5, 0.0, -0.5], tc=0.0)
        assert out.tolist() == [1, 0, -1]

    def test_negative_cost_rejected(self):
        with pytest.raises(ValueError):
            signals([0.1], tc=-1e-5)

    def test_make_signals_carries_dates(self):
        s = make_signals(days("2020-01-01", 3), [0.1, 0.0, -0.1], 0.01)
        assert s.values.tolist() == [1, 0, -1]
        assert s.dates[0] == np.datetime64("2020-01-01")

    def test_signal_series_validation(self):
        with pytest.raises(ValueError):
            sig([2, 0])
        with pytest.raises(LengthMismatch):
            SignalSeries(dates=days("2020-01-01", 2), values=[1])


class TestPositions:
    def test_hold_through_zero_signals(self):
        pos = resolve_positions([1, 0, 0, -1, 0, 1])
        assert pos.tolist() == [1, 1, 1, -1, -1, 1]

    def test_flat_until_first_signal(self):
        assert resolve_positions([0, 0, 1]).tolist() == [0, 0, 1]

    def test_long_only_clamps_shorts(self):
        pos = resolve_positions([1, 0, -1, 0, 1], long_only=True)
        assert pos.tolist() == [1, 1, 0, 0, 1]

    def test_long_only_sell_without_position_is_noop(self):
        pos = resolve_positions([-1, 0, 1], long_only=True)
        assert pos.tolist() == [0, 0, 1]


class TestStrategyAccounting:
    def test_all_zero_signals_stay_flat(self):
        asset = series([0.01, -0.02, 0.03])
        res = run_strategy(asset, sig([0, 0, 0]), StrategyConfig(tc=0.001))
        assert np.allclose(res.equity, 1.0)
        assert res.trades == ()

    def test_always_long_zero_cost_is_buy_and_hold(self):
        asset = series([0.01, -0.02, 0.03, 0.005])
        res = run_strategy(asset, sig([1, 1, 1, 1]), StrategyConfig(tc=0.0))
        bh = buy_and_hold(asset, trading_days=252)
        assert np.max(np.abs(res.equity - bh.equity)) < 1e-12

    def test_flip_charges_double_cost(self):
        tc = 0.001
        asset = series([0.01, 0.02])
        res = run_strategy(asset, sig([1, -1]),
                           StrategyConfig(tc=tc))
        # open costs tc, the flip closes and reopens: 2 tc
        assert res.returns[0] == pytest.approx(0.01 - tc)
        assert res.returns[1] == pytest.approx(-0.02 - 2 * tc)
        assert len(res.trades) == 2
        assert res.trades[1].cost == pytest.approx(2 * tc * res.equity[0])

    def test_short_position_earns_negative_return(self):
        asset = series([-0.05, -0.05])
        res = run_strategy(asset, sig([-1, 0]), StrategyConfig(tc=0.0))
        assert np.allclose(res.equity, [1.05, 1.05 * 1.05])

    def test_misaligned_dates_raise(self):
        asset = series([0.01, 0.02, 0.03])
        bad = sig([1, 1], start="2020-02-01")
        with pytest.raises(MisalignedSeries):
            run_strategy(asset, bad, StrategyConfig())

    def test_single_day_rejected(self):
        with pytest.raises(TooShort):
            run_strategy(series([0.01, 0.02]), sig([1]), StrategyConfig())

    def test_config_validation(self):
        with pytest.raises(ValueError):
            StrategyConfig(mode="hedge")
        with pytest.raises(ValueError):
            StrategyConfig(tc=-0.1)
        with pytest.raises(ValueError):
            StrategyConfig(trading_days=0)


class TestErrorMetrics:
    def test_hand_case(self):
        assert rmse([3.0, -4.0], [0.0, 0.0]) == pytest.approx(np.sqrt(12.5))
        assert mae([3.0, -4.0], [0.0, 0.0]) == pytest.approx(3.5)

    def test_perfect_forecast(self):
        assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0
        assert mae([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            rmse([1.0], [1.0, 2.0])
        with pytest.raises(LengthMismatch):
            mae([], [])


class TestIndicators:
    def test_arc_exact_four_year_quadrupling(self):
        # 1461 calendar days is exactly four 365.25-day years
        dates = np.array([np.datetime64("2018-01-01"),
                          np.datetime64("2018-01-01") + 1460])
        assert arc(dates, [1.1, 16.0]) == pytest.approx(1.0)

    def test_arc_flat_equity_is_zero(self):
        assert arc(days("2020-01-01", 5), np.ones(5)) == 0.0

    def test_arc_needs_two_days(self):
        with pytest.raises(TooShort):
            arc(days("2020-01-01", 1), [1.0])

    def test_asd_constant_returns(self):
        # 0.01 is not a binary float, so the mean subtraction leaves dust
        assert asd(np.full(10, 0.01), 252) == pytest.approx(0.0, abs=1e-12)

    def test_asd_alternating_closed_form(self):
        r = np.tile([0.01, -0.01], 5)
        want = np.sqrt(252) * 0.01 * np.sqrt(10 / 9)
        assert asd(r, 252) == pytest.approx(want)

    def test_md_monotone_equity_is_zero(self):
        assert max_drawdown([1.1, 1.2, 1.3]) == 0.0

    def test_md_single_dip(self):
        assert max_drawdown([1.0, 0.5, 0.8]) == pytest.approx(0.5)

    def test_md_counts_drop_from_initial_capital(self):
        assert max_drawdown([0.9, 0.95]) == pytest.approx(0.1)

    def test_ir_rounds_to_published_value(self):
        assert round(ir(0.1220, 0.1800), 2) == 0.68

    def test_ir_star_hand_case(self):
        assert ir_star(0.10, 0.20, 0.50) == pytest.approx(0.10)

    def test_zero_arc_zeroes_all_ratios(self):
        m = compute_metrics(days("2020-01-01", 4),
                            [0.01, -0.01, 0.0099, -0.0099],
                            [1.01, 0.9999, 1.0098, 0.9999], 252)
        assert m.arc == pytest.approx(-0.0091, abs=0.02)
        assert ir(0.0, 0.2) == 0.0
        assert ir_star(0.0, 0.2, 0.5) == 0.0
        assert sortino(0.0, 0.2) == 0.0

    def test_degenerate_denominators_flagged(self):
        m = compute_metrics(days("2020-01-01", 3), np.zeros(3), np.ones(3),
                            252)
        assert m.ir == 0.0 and m.ir_star == 0.0 and m.sr == 0.0
        assert set(m.degenerate) == {"ir", "ir_star", "sr"}

    def test_downside_std_ignores_gains(self):
        r = np.array([0.05, -0.01, 0.04, -0.03, 0.02])
        want = np.sqrt(252) * np.std([-0.01, -0.03], ddof=1)
        assert downside_std(r, 252) == pytest.approx(want)
        assert downside_std([0.01, 0.02, 0.03], 252) == 0.0


class TestPortfolio:
    def test_identical_legs_reproduce_the_leg(self):
        asset = series(np.full(40, 0.002))
        leg = buy_and_hold(asset, trading_days=365)
        blend = portfolio(leg, leg)
        assert np.max(np.abs(blend.equity - leg.equity)) < 1e-12

    def test_flat_leg_halves_returns(self):
        active = series([0.02, 0.04, -0.02])
        flat = series([0.0, 0.0, 0.0])
        blend = portfolio(buy_and_hold(active, 365),
                          buy_and_hold(flat, 365))
        assert np.allclose(blend.returns, [0.01, 0.02, -0.01])

    def test_intersection_of_calendars(self):
        a = buy_and_hold(series(np.full(10, 0.001), start="2020-01-01"), 365)
        b = buy_and_hold(series(np.full(10, 0.002), start="2020-01-06"), 365)
        blend = portfolio(a, b)
        assert len(blend.dates) == 5
        assert blend.dates[0] == np.datetime64("2020-01-06")

    def test_disjoint_calendars_raise(self):
        a = buy_and_hold(series(np.full(5, 0.001), start="2020-01-01"), 365)
        b = buy_and_hold(series(np.full(5, 0.001), start="2021-01-01"), 365)
        with pytest.raises(MisalignedSeries):
            portfolio(a, b)


finite_returns = st.lists(
    st.floats(min_value=-0.3, max_value=0.3, allow_nan=False,
              width=64), min_size=2, max_size=60)
signal_lists = st.lists(st.sampled_from([-1, 0, 1]), min_size=2, max_size=60)


class TestProperties:
    @settings(max_examples=200)
    @given(finite_returns)
    def test_always_long_zero_cost_matches_buy_and_hold(self, r):
        asset = series(r)
        res = run_strategy(asset, sig([1] * len(r)), StrategyConfig(tc=0.0))
        bh = buy_and_hold(asset, trading_days=252)
        assert np.max(np.abs(res.equity - bh.equity)) < 1e-12

    @settings(max_examples=200)
    @given(finite_returns, signal_lists,
           st.floats(min_value=0.0, max_value=0.01),
           st.floats(min_value=0.0, max_value=0.01))
    def test_cost_monotonicity(self, r, s, tc1, tc2):
        n = min(len(r), len(s))
        asset, ss = series(r[:n]), sig(s[:n])
        lo, hi = sorted((tc1, tc2))
        e_lo = run_strategy(asset, ss, StrategyConfig(tc=lo)).equity[-1]
        e_hi = run_strategy(asset, ss, StrategyConfig(tc=hi)).equity[-1]
        assert e_hi <= e_lo + 1e-12

    @settings(max_examples=200)
    @given(finite_returns, signal_lists, st.booleans(),
           st.floats(min_value=0.0, max_value=0.01))
    def test_position_domain_and_trade_timing(self, r, s, long_only, tc):
        n = min(len(r), len(s))
        mode = "long_only" if long_only else "long_short"
        res = run_strategy(series(r[:n]), sig(s[:n]),
                           StrategyConfig(mode=mode, tc=tc))
        allowed = {0, 1} if long_only else {-1, 0, 1}
        assert set(res.positions.tolist()) <= allowed
        # positions may move only where a nonzero signal disagrees
        prev = np.concatenate(([0], res.positions[:-1]))
        moved = np.flatnonzero(res.positions != prev)
        sigv = np.asarray(s[:n])
        assert np.all(sigv[moved] != 0)
        assert res.equity.min() > 0

    @settings(max_examples=200)
    @given(finite_returns)
    def test_md_bounds_and_prefix_monotonicity(self, r):
        equity = np.cumprod(1.0 + np.asarray(r))
        full = max_drawdown(equity)
        assert 0.0 <= full <= 1.0
        prev = 0.0
        for k in range(1, len(equity) + 1):
            cur = max_drawdown(equity[:k])
            assert cur >= prev - 1e-15
            prev = cur
        assert prev == pytest.approx(full)

    @settings(max_examples=200)
    @given(st.lists(st.floats(min_value=-1.0, max_value=1.0,
                              allow_nan=False), min_size=1, max_size=50),
           st.lists(st.floats(min_value=-1.0, max_value=1.0,
                              allow_nan=False), min_size=1, max_size=50))
    def test_rmse_dominates_mae(self, p, a):
        n = min(len(p), len(a))
        assert rmse(p[:n], a[:n]) >= mae(p[:n], a[:n]) - 1e-15

    @settings(max_examples=200)
    @given(finite_returns)
    def test_ratio_identities(self, r):
        asset = series(r)
        res = buy_and_hold(asset, trading_days=252)
        m = res.metrics
        if "ir" not in m.degenerate:
            assert m.ir * m.asd == pytest.approx(m.arc, rel=1e-12, abs=1e-15)
        if "ir_star" not in m.degenerate:
            assert m.ir_star * m.asd * m.md == pytest.approx(
                m.arc * abs(m.arc), rel=1e-12, abs=1e-15)
