"""Command-line pipeline: forecast, trade, and report from one config file.

`run` executes every configured method on every asset: walk-forward
forecasts, long-short and long-only backtests, metrics tables, equity
lines, plots, and a manifest. Method failures are isolated; the command
exits 0 only when everything ran, 2 when some methods failed, 1 on fatal
errors. `describe` prints summary statistics of a return file.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .backtest import (
    BacktestResult,
    StrategyConfig,
    buy_and_hold,
    mae,
    make_signals,
    portfolio,
    rmse,
    run_strategy,
)
from .config import (
    BUY_AND_HOLD,
    AssetConfig,
    ExperimentConfig,
    config_digest,
    load_config,
)
from .errors import ConfigError, DataError, HybridcastError
from .methods import make_method
from .reports import (
    MetricsRow,
    plot_equity,
    versions,
    write_equity_csv,
    write_forecast_csv,
    write_manifest,
    write_metrics_csv,
)
from .timeseries import describe, ingest_csv, log_returns, simple_returns
from .validation import make_windows, run_walk_forward

STRATEGIES = ("long_short", "long_only")


@dataclass
class MethodTask:
    asset: AssetConfig
    method: str
    grids: dict
    seed: int


@dataclass
class MethodOutcome:
    asset: str
    method: str
    elapsed: float
    error: str | None = None
    dates: np.ndarray | None = None
    forecasts: np.ndarray | None = None
    actuals: np.ndarray | None = None
    rmse: float | None = None
    mae: float | None = None
    results: dict | None = None  # strategy name -> BacktestResult
    n_windows: int = 0


def _task_seed(base: int, asset_index: int, method_index: int) -> int:
    ss = np.random.SeedSequence(base, spawn_key=(asset_index, method_index))
    return int(ss.generate_state(1)[0])


def _load_asset_series(asset: AssetConfig):
    prices = ingest_csv(asset.csv)
    return log_returns(prices), simple_returns(prices)


def _backtests(task: MethodTask, dates, forecasts, simple) -> dict:
    sig = make_signals(dates, forecasts, task.asset.tc)
    out = {}
    for mode in STRATEGIES:
        cfg = StrategyConfig(mode=mode, tc=task.asset.tc,
                             trading_days=task.asset.trading_days)
        out[mode] = run_strategy(simple, sig, cfg)
    return out


def run_method_task(task: MethodTask) -> MethodOutcome:
    """Forecast and backtest one method on one asset; never raises
    domain errors, they come back on the outcome."""
    start = time.perf_counter()
    try:
        logret, simple = _load_asset_series(task.asset)
        method = make_method(task.method, grid_overrides=task.grids)
        res = run_walk_forward(logret, task.asset.plan, method,
                               seed=task.seed)
        res.audit.check()
        results = _backtests(task, res.dates, res.forecasts, simple)
        return MethodOutcome(
            asset=task.asset.name, method=task.method,
            elapsed=time.perf_counter() - start,
            dates=res.dates, forecasts=res.forecasts, actuals=res.actuals,
            rmse=rmse(res.forecasts, res.actuals),
            mae=mae(res.forecasts, res.actuals),
            results=results, n_windows=len(res.windows))
    except (HybridcastError, ValueError) as exc:
        return MethodOutcome(asset=task.asset.name, method=task.method,
                             elapsed=time.perf_counter() - start,
                             error=f"{type(exc).__name__}: {exc}")


def _buy_and_hold_outcome(asset: AssetConfig) -> MethodOutcome:
    start = time.perf_counter()
    try:
        logret, simple = _load_asset_series(asset)
        splits = make_windows(asset.plan, logret)
        lo, hi = splits[0].test_range[0], splits[-1].test_range[1]
        mask = (simple.dates >= lo) & (simple.dates < hi)
        held = dataclasses.replace(simple, dates=simple.dates[mask],
                                   values=simple.values[mask])
        bench = buy_and_hold(held, trading_days=asset.trading_days)
        return MethodOutcome(asset=asset.name, method=BUY_AND_HOLD,
                             elapsed=time.perf_counter() - start,
                             results={m: bench for m in STRATEGIES},
                             n_windows=len(splits))
    except (HybridcastError, ValueError) as exc:
        return MethodOutcome(asset=asset.name, method=BUY_AND_HOLD,
                             elapsed=time.perf_counter() - start,
                             error=f"{type(exc).__name__}: {exc}")


def _emit_asset_reports(outdir: Path, asset: str,
                        outcomes: list[MethodOutcome]) -> list[Path]:
    adir = outdir / asset
    adir.mkdir(parents=True, exist_ok=True)
    files = []
    for mode in STRATEGIES:
        rows = [MetricsRow(method=o.method, rmse=o.rmse, mae=o.mae,
                           result=o.results[mode])
                for o in outcomes if o.results is not None]
        metrics_path = adir / f"metrics_{mode}.csv"
        write_metrics_csv(metrics_path, rows)
        equity_path = adir / f"equity_{mode}.csv"
        write_equity_csv(equity_path, rows)
        svg_path = adir / f"equity_{mode}.svg"
        plot_equity(svg_path, rows,
                    title=f"{asset} equity, {mode.replace('_', '-')}")
        files += [metrics_path, equity_path, svg_path]
    legs = [(o.method, o.dates, o.forecasts, o.actuals)
            for o in outcomes if o.forecasts is not None]
    if legs:
        fpath = adir / "forecasts.csv"
        write_forecast_csv(fpath, legs)
        files.append(fpath)
    return files


def _emit_portfolio_reports(outdir: Path,
                            by_asset: dict) -> list[Path]:
    a_name, b_name = list(by_asset)
    pdir = outdir / "portfolio"
    pdir.mkdir(parents=True, exist_ok=True)
    files = []
    for mode in STRATEGIES:
        rows = []
        for oa in by_asset[a_name]:
            ob = next((o for o in by_asset[b_name]
                       if o.method == oa.method), None)
            if oa.results is None or ob is None or ob.results is None:
                continue
            blend = portfolio(oa.results[mode], ob.results[mode])
            rows.append(MetricsRow(method=oa.method, rmse=None, mae=None,
                                   result=blend))
        if not rows:
            continue
        metrics_path = pdir / f"metrics_{mode}.csv"
        write_metrics_csv(metrics_path, rows)
        equity_path = pdir / f"equity_{mode}.csv"
        write_equity_csv(equity_path, rows)
        svg_path = pdir / f"equity_{mode}.svg"
        plot_equity(svg_path, rows,
                    title=f"{a_name}+{b_name} equity, "
                          f"{mode.replace('_', '-')}")
        files += [metrics_path, equity_path, svg_path]
    return files


def run_experiment(cfg: ExperimentConfig, config_path=None,
                   jobs: int = 1) -> dict:
    """Execute the full pipeline and write reports; returns the manifest."""
    outdir = cfg.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    tasks = []
    for ai, asset in enumerate(cfg.assets):
        for mi, label in enumerate(cfg.methods):
            if label == BUY_AND_HOLD:
                continue
            tasks.append(MethodTask(asset=asset, method=label,
                                    grids=cfg.grids,
                                    seed=_task_seed(cfg.seed, ai, mi)))
    if jobs > 1 and tasks:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(run_method_task, tasks))
    else:
        outcomes = [run_method_task(t) for t in tasks]
    by_key = {(o.asset, o.method): o for o in outcomes}

    by_asset: dict[str, list[MethodOutcome]] = {}
    failures: dict[str, str] = {}
    timings: dict[str, float] = {}
    n_windows: dict[str, int] = {}
    for asset in cfg.assets:
        ordered = []
        for label in cfg.methods:
            if label == BUY_AND_HOLD:
                o = _buy_and_hold_outcome(asset)
            else:
                o = by_key[(asset.name, label)]
            key = f"{asset.name}/{label}"
            timings[key] = round(o.elapsed, 3)
            if o.error is not None:
                failures[key] = o.error
                continue
            n_windows[asset.name] = o.n_windows
            ordered.append(o)
        by_asset[asset.name] = ordered

    files = []
    for asset in cfg.assets:
        files += _emit_asset_reports(outdir, asset.name,
                                     by_asset[asset.name])
    if len(cfg.assets) == 2:
        files += _emit_portfolio_reports(outdir, by_asset)

    manifest = {
        "config_sha256": (config_digest(config_path)
                          if config_path is not None else None),
        "seed": cfg.seed,
        "methods": list(cfg.methods),
        "assets": [a.name for a in cfg.assets],
        "n_windows": n_windows,
        "failures": failures,
        "timings": timings,
        "versions": versions(),
        "files": sorted(str(f.relative_to(outdir)) for f in files),
    }
    manifest_path = outdir / "manifest.json"
    write_manifest(manifest_path, manifest)
    return manifest


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.out is not None:
        cfg = dataclasses.replace(cfg, output_dir=Path(args.out))
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    manifest = run_experiment(cfg, config_path=args.config, jobs=args.jobs)
    for key, msg in manifest["failures"].items():
        print(f"failed: {key}: {msg}", file=sys.stderr)
    print(f"wrote {len(manifest['files'])} files to {cfg.output_dir}")
    return 2 if manifest["failures"] else 0


def _cmd_describe(args) -> int:
    returns = log_returns(ingest_csv(args.data))
    stats = describe(returns)
    print(f"observations      {stats.count}")
    for name, value in (("mean", stats.mean), ("std", stats.std),
                        ("min", stats.min_value), ("q1", stats.q1),
                        ("median", stats.median), ("q3", stats.q3),
                        ("max", stats.max_value)):
        print(f"{name:<18}{100.0 * value:.4f}%")
    print(f"{'skewness':<18}{stats.skewness:.4f}")
    print(f"{'kurtosis':<18}{stats.kurtosis:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybridcast",
        description="daily return forecasting and strategy backtesting")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="execute an experiment config")
    run_p.add_argument("--config", required=True, help="YAML experiment file")
    run_p.add_argument("--out", default=None, help="output directory")
    run_p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
    run_p.add_argument("--jobs", type=int, default=1,
                       help="parallel method workers")
    run_p.set_defaults(func=_cmd_run)
    desc_p = sub.add_parser("describe",
                            help="print return statistics for a CSV")
    desc_p.add_argument("--data", required=True, help="CSV of daily closes")
    desc_p.set_defaults(func=_cmd_describe)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
