"""Result tables, equity-line files and plots, and the run manifest.

All emitters are deterministic: given the same inputs they write the same
bytes, so identical runs can be compared file-by-file. Plots are rendered
headlessly to SVG with a fixed hash salt and no timestamp metadata.
"""
from __future__ import annotations

import json
import platform
from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  backend pinned first

from .backtest import BacktestResult  # noqa: E402

METRICS_HEADER = "method,rmse,mae,arc,asd,md,ir,ir_star,sr"
EQUITY_HEADER = "date,method,equity"
FORECAST_HEADER = "date,method,forecast,actual"

plt.rcParams["svg.hashsalt"] = "hybridcast"


@dataclass(frozen=True)
class MetricsRow:
    """One table line: a method with its errors and trading indicators."""

    method: str
    rmse: float | None  # None for the passive benchmark
    mae: float | None
    result: BacktestResult


def format_percent(x: float, decimals: int) -> str:
    return f"{100.0 * x:.{decimals}f}%"


def format_ratio(x: float) -> str:
    return f"{x:.2f}"


def metrics_line(row: MetricsRow) -> str:
    m = row.result.metrics
    rmse = "" if row.rmse is None else format_percent(row.rmse, 4)
    mae = "" if row.mae is None else format_percent(row.mae, 4)
    cells = [row.method, rmse, mae,
             format_percent(m.arc, 2), format_percent(m.asd, 2),
             format_percent(m.md, 2), format_ratio(m.ir),
             format_ratio(m.ir_star), format_ratio(m.sr)]
    return ",".join(cells)


def write_metrics_csv(path: Path, rows: list[MetricsRow]) -> None:
    lines = [METRICS_HEADER] + [metrics_line(r) for r in rows]
    path.write_text("\n".join(lines) + "\n")


def write_equity_csv(path: Path, rows: list[MetricsRow]) -> None:
    lines = [EQUITY_HEADER]
    for row in rows:
        res = row.result
        for d, e in zip(res.dates, res.equity):
            lines.append(f"{d},{row.method},{e:.12g}")
    path.write_text("\n".join(lines) + "\n")


def write_forecast_csv(path: Path, legs: list[tuple[str, np.ndarray,
                                                    np.ndarray,
                                                    np.ndarray]]) -> None:
    """legs: (method, dates, forecasts, actuals), one block per method."""
    lines = [FORECAST_HEADER]
    for method, dates, forecasts, actuals in legs:
        for d, f, a in zip(dates, forecasts, actuals):
            lines.append(f"{d},{method},{f:.12g},{a:.12g}")
    path.write_text("\n".join(lines) + "\n")


def plot_equity(path: Path, rows: list[MetricsRow], title: str,
                log_scale: bool = False) -> None:
    fig, ax = plt.subplots(figsize=(10, 6))
    try:
        for row in rows:
            res = row.result
            ax.plot(res.dates.astype("datetime64[D]").astype("O"),
                    res.equity, label=row.method, linewidth=1.0)
        ax.set_title(title)
        ax.set_ylabel("equity")
        if log_scale:
            ax.set_yscale("log")
        ax.legend(loc="upper left", fontsize=7, ncol=2)
        ax.grid(True, alpha=0.3)
        fig.autofmt_xdate()
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)


def versions() -> dict:
    import matplotlib as mpl
    import scipy
    import sklearn

    from . import __version__

    return {"python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "sklearn": sklearn.__version__,
            "matplotlib": mpl.__version__, "hybridcast": __version__}


def write_manifest(path: Path, manifest: dict) -> None:
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
