"""Price/return series ingestion and descriptive statistics.

The pipeline's primitive objects live here: an immutable daily close series,
the log-return series derived from it, and the summary statistics used for
data sanity tables.
"""
from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass

import numpy as np

from .errors import (
    DuplicateDate,
    EmptyFile,
    MalformedRow,
    NonPositivePrice,
    TooShort,
)

__all__ = [
    "PriceSeries",
    "ReturnSeries",
    "DescriptiveStats",
    "CsvSpec",
    "ingest_csv",
    "log_returns",
    "simple_returns",
    "describe",
]


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.array(a, copy=True)
    out.flags.writeable = False
    return out


def _check_dates(dates: np.ndarray) -> np.ndarray:
    dates = np.asarray(dates, dtype="datetime64[D]")
    if dates.ndim != 1:
        raise ValueError("dates must be one-dimensional")
    if len(dates) > 1:
        deltas = np.diff(dates).astype(int)
        if np.any(deltas <= 0):
            bad = int(np.argmax(deltas <= 0)) + 1
            if deltas[bad - 1] == 0:
                raise DuplicateDate(dates[bad])
            raise ValueError(f"dates must be strictly increasing at index {bad}")
    return dates


@dataclass(frozen=True)
class PriceSeries:
    """Daily closes, strictly increasing dates, all closes positive."""

    dates: np.ndarray  # datetime64[D]
    closes: np.ndarray  # float64

    def __post_init__(self):
        dates = _check_dates(self.dates)
        closes = np.asarray(self.closes, dtype=np.float64)
        if closes.ndim != 1 or len(closes) != len(dates):
            raise ValueError("dates and closes must be 1-D and the same length")
        if not np.all(np.isfinite(closes)):
            raise ValueError("closes must be finite")
        if np.any(closes <= 0.0):
            bad = int(np.argmax(closes <= 0.0))
            raise NonPositivePrice(bad, float(closes[bad]))
        object.__setattr__(self, "dates", _freeze(dates))
        object.__setattr__(self, "closes", _freeze(closes))

    def __len__(self) -> int:
        return len(self.dates)

    def slice(self, start: dt.date, end: dt.date) -> "PriceSeries":
        """Rows with start <= date < end."""
        lo = np.datetime64(start, "D")
        hi = np.datetime64(end, "D")
        m = (self.dates >= lo) & (self.dates < hi)
        return PriceSeries(self.dates[m], self.closes[m])


@dataclass(frozen=True)
class ReturnSeries:
    """Daily returns, each dated at the later of the two days it spans."""

    dates: np.ndarray  # datetime64[D]
    values: np.ndarray  # float64

    def __post_init__(self):
        dates = _check_dates(self.dates)
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or len(values) != len(dates):
            raise ValueError("dates and values must be 1-D and the same length")
        if not np.all(np.isfinite(values)):
            raise ValueError("returns must be finite")
        object.__setattr__(self, "dates", _freeze(dates))
        object.__setattr__(self, "values", _freeze(values))

    def __len__(self) -> int:
        return len(self.dates)

    def slice(self, start: dt.date, end: dt.date) -> "ReturnSeries":
        """Rows with start <= date < end."""
        lo = np.datetime64(start, "D")
        hi = np.datetime64(end, "D")
        m = (self.dates >= lo) & (self.dates < hi)
        return ReturnSeries(self.dates[m], self.values[m])


@dataclass(frozen=True)
class DescriptiveStats:
    count: int
    min_value: float
    q1: float
    median: float
    mean: float
    q3: float
    max_value: float
    std: float
    skewness: float
    kurtosis: float


@dataclass(frozen=True)
class CsvSpec:
    """Input file layout; the default is the only documented format."""

    date_column: str = "date"
    close_column: str = "close"
    delimiter: str = ","


def ingest_csv(path, spec: CsvSpec = CsvSpec()) -> PriceSeries:
    """Read a close-price CSV into a PriceSeries.

    The file must be UTF-8 (BOM tolerated), LF or CRLF line endings, with a
    `date,close` header, ISO-8601 dates and dot-decimal positive closes.
    Rows are sorted by date after parsing; malformed or non-positive rows
    fail loudly with their 1-based line number.
    """
    rows: list[tuple[dt.date, float, int]] = []
    with open(path, "r", encoding="utf-8-sig", newline="") as fh:
        reader = csv.reader(fh, delimiter=spec.delimiter)
        header = None
        for rec in reader:
            if header is None:
                header = [c.strip() for c in rec]
                if header != [spec.date_column, spec.close_column]:
                    raise MalformedRow(
                        reader.line_num,
                        f"expected header "
                        f"{spec.date_column!r},{spec.close_column!r}, got {rec!r}",
                    )
                continue
            if not any(f.strip() for f in rec):
                continue  # blank line
            line = reader.line_num
            if len(rec) != 2:
                raise MalformedRow(line, f"expected 2 fields, got {len(rec)}")
            raw_date, raw_close = rec[0].strip(), rec[1].strip()
            try:
                date = dt.date.fromisoformat(raw_date)
            except ValueError:
                raise MalformedRow(line, f"bad date {raw_date!r}") from None
            if not raw_close:
                raise MalformedRow(line, "missing close")
            try:
                close = float(raw_close)
            except ValueError:
                raise MalformedRow(line, f"bad close {raw_close!r}") from None
            if not np.isfinite(close):
                raise MalformedRow(line, f"non-finite close {raw_close!r}")
            if close <= 0.0:
                raise NonPositivePrice(line, close)
            rows.append((date, close, line))
    if header is None or not rows:
        raise EmptyFile(f"{path}: no data rows")
    rows.sort(key=lambda r: r[0])
    for (d0, _, _), (d1, _, _) in zip(rows, rows[1:]):
        if d0 == d1:
            raise DuplicateDate(d0)
    dates = np.array([r[0] for r in rows], dtype="datetime64[D]")
    closes = np.array([r[1] for r in rows], dtype=np.float64)
    return PriceSeries(dates, closes)


def log_returns(prices: PriceSeries) -> ReturnSeries:
    """r_t = ln(P_t) - ln(P_{t-1}), dated at day t."""
    if len(prices) < 2:
        raise TooShort("need at least 2 closes to form a return")
    values = np.diff(np.log(prices.closes))
    return ReturnSeries(prices.dates[1:], values)


def simple_returns(prices: PriceSeries) -> ReturnSeries:
    """P_t / P_{t-1} - 1, dated at day t; the backtest's P&L currency."""
    if len(prices) < 2:
        raise TooShort("need at least 2 closes to form a return")
    values = prices.closes[1:] / prices.closes[:-1] - 1.0
    return ReturnSeries(prices.dates[1:], values)


def describe(returns) -> DescriptiveStats:
    """Summary statistics of a return series.

    Quartiles use linear interpolation; std is the sample estimate; skewness
    is the adjusted Fisher-Pearson estimator and kurtosis is sample excess
    kurtosis (normal = 0). Undefined shape statistics (tiny or zero-variance
    samples) come back as NaN rather than raising.
    """
    x = np.asarray(getattr(returns, "values", returns), dtype=np.float64)
    n = len(x)
    if n < 2:
        raise TooShort("describe needs at least 2 observations")
    mean = float(np.mean(x))
    d = x - mean
    m2 = float(np.mean(d**2))
    m3 = float(np.mean(d**3))
    m4 = float(np.mean(d**4))
    std = float(np.std(x, ddof=1))
    if m2 > 0.0 and n >= 3:
        g1 = m3 / m2**1.5
        skew = g1 * np.sqrt(n * (n - 1.0)) / (n - 2.0)
    else:
        skew = float("nan")
    if m2 > 0.0 and n >= 4:
        g2 = m4 / m2**2 - 3.0
        kurt = ((n + 1.0) * g2 + 6.0) * (n - 1.0) / ((n - 2.0) * (n - 3.0))
    else:
        kurt = float("nan")
    q1, median, q3 = (float(q) for q in np.quantile(x, [0.25, 0.5, 0.75]))
    return DescriptiveStats(
        count=n,
        min_value=float(np.min(x)),
        q1=q1,
        median=median,
        mean=mean,
        q3=q3,
        max_value=float(np.max(x)),
        std=std,
        skewness=float(skew),
        kurtosis=float(kurt),
    )
