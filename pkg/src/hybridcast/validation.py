"""Rolling-window calibration: nested-fold grid search and walk-forward runs.

A window is anchored every step months: train months, then a validation
span, then a test span. The three validation folds are nested expanding
prefixes of the validation span (their month lengths are given in ascending
order and the largest equals the whole span). Each candidate is fit once on
the train segment and scored by RMSE on each fold prefix; the best mean is
refit on train+validation and forecasts the test segment. Forecast
recursions always restart at the fit-window start, so training residuals
reproduce exactly at prediction time.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    AllCandidatesFailed,
    HybridcastError,
    InsufficientSpan,
    LeakageDetected,
)
from .timeseries import ReturnSeries

__all__ = [
    "WindowPlan",
    "FoldSplit",
    "GridSearchReport",
    "LeakageAudit",
    "WindowResult",
    "WalkForwardResult",
    "preset_plan",
    "make_windows",
    "grid_search",
    "run_walk_forward",
]

_DAY = "datetime64[D]"
_MONTH = "datetime64[M]"


@dataclass(frozen=True)
class WindowPlan:
    """Calendar geometry of the rolling windows, all lengths in months."""

    train_months: int
    val_months: tuple[int, int, int]
    test_months: int
    step_months: int
    start_date: np.datetime64
    end_date: np.datetime64  # inclusive

    def __post_init__(self):
        object.__setattr__(self, "start_date",
                           np.datetime64(self.start_date, "D"))
        object.__setattr__(self, "end_date",
                           np.datetime64(self.end_date, "D"))
        object.__setattr__(self, "val_months", tuple(self.val_months))
        if self.train_months < 1 or self.test_months < 1:
            raise ValueError("train and test lengths must be positive")
        if self.step_months < 1:
            raise ValueError("step must be positive")
        if len(self.val_months) != 3:
            raise ValueError("exactly three validation fold lengths needed")
        if list(self.val_months) != sorted(set(self.val_months)):
            raise ValueError("validation fold lengths must strictly increase")
        if self.val_months[0] < 1:
            raise ValueError("validation fold lengths must be positive")
        if self.start_date >= self.end_date:
            raise ValueError("start_date must precede end_date")


def preset_plan(name: str) -> WindowPlan:
    if name == "sp500":
        return WindowPlan(36, (8, 16, 24), 12, 12,
                          np.datetime64("2002-01-01"),
                          np.datetime64("2023-12-31"))
    if name == "bitcoin":
        return WindowPlan(24, (4, 8, 12), 6, 6,
                          np.datetime64("2015-01-01"),
                          np.datetime64("2023-12-31"))
    raise ValueError(f"unknown plan preset {name!r}")


@dataclass(frozen=True)
class FoldSplit:
    """Date intervals of one window; all ranges are half-open [start, end)."""

    train_range: tuple[np.datetime64, np.datetime64]
    val_ranges: tuple[tuple[np.datetime64, np.datetime64], ...]
    test_range: tuple[np.datetime64, np.datetime64]

    def __post_init__(self):
        tr, vs, te = self.train_range, self.val_ranges, self.test_range
        if not (tr[0] < tr[1] <= vs[0][0] and vs[-1][1] <= te[0] < te[1]):
            raise ValueError("ranges must be ordered train < val < test")
        if len(vs) != 3:
            raise ValueError("exactly three validation folds needed")
        if any(v[0] != vs[0][0] for v in vs):
            raise ValueError("validation folds must share their start")
        if not vs[0][1] < vs[1][1] < vs[2][1]:
            raise ValueError("validation folds must be nested prefixes")
        if tr[1] != vs[0][0] or vs[-1][1] != te[0]:
            raise ValueError("ranges must be contiguous")


def _month_day(month: np.datetime64) -> np.datetime64:
    return month.astype(_DAY)


def make_windows(plan: WindowPlan, series: ReturnSeries) -> list[FoldSplit]:
    """Lay out every window that fits the plan over the series span."""
    start_m = plan.start_date.astype(_MONTH)
    end_excl_m = plan.end_date.astype(_MONTH) + 1
    span = int(end_excl_m - start_m)
    vmax = plan.val_months[-1]
    need = plan.train_months + vmax + plan.test_months
    if span < need:
        raise InsufficientSpan(
            f"plan needs {need} months but the span holds {span}"
        )
    count = (span - need) // plan.step_months + 1
    if series.dates[0] >= _month_day(start_m + 1):
        raise InsufficientSpan(
            "series begins after the first month of the plan"
        )
    last_test_start = start_m + (count - 1) * plan.step_months + (
        plan.train_months + vmax)
    if series.dates[-1] < _month_day(last_test_start):
        raise InsufficientSpan(
            "series ends before the last test range starts"
        )
    splits = []
    for w in range(count):
        a = start_m + w * plan.step_months
        t1 = a + plan.train_months
        vals = tuple(
            (_month_day(t1), _month_day(t1 + v)) for v in plan.val_months
        )
        e3 = t1 + vmax
        splits.append(FoldSplit(
            train_range=(_month_day(a), _month_day(t1)),
            val_ranges=vals,
            test_range=(_month_day(e3), _month_day(e3 + plan.test_months)),
        ))
    return splits


@dataclass
class GridSearchReport:
    """Per-candidate nested-fold scores for one window."""

    method: str
    candidates: list[dict]
    fold_rmse: np.ndarray  # (n_candidates, 3), NaN rows for failures
    mean_rmse: np.ndarray  # (n_candidates,)
    best_index: int
    failures: list[tuple[int, str]] = field(default_factory=list)

    @property
    def best_candidate(self) -> dict:
        return self.candidates[self.best_index]


def _locate(dates: np.ndarray, day: np.datetime64) -> int:
    return int(np.searchsorted(dates, day))


def grid_search(series: ReturnSeries, split: FoldSplit, method,
                seed: int = 0,
                candidates: Sequence[Mapping] | None = None
                ) -> GridSearchReport:
    """Fit every candidate on train and score it on the three fold prefixes.

    Ties keep the earliest candidate in grid order. Candidates whose fit or
    prediction raises a domain error are recorded and skipped.
    """
    cands = [dict(c) for c in (method.candidates()
                               if candidates is None else candidates)]
    if not cands:
        raise AllCandidatesFailed("empty hyperparameter grid")
    dates, values = series.dates, series.values
    i0 = _locate(dates, split.train_range[0])
    i1 = _locate(dates, split.train_range[1])
    ends = [_locate(dates, v[1]) for v in split.val_ranges]
    e3 = ends[-1]
    fold_rmse = np.full((len(cands), 3), np.nan)
    failures: list[tuple[int, str]] = []
    train_vals = values[i0:i1]
    val_vals = values[i0:e3]
    targets = np.arange(i1 - i0, e3 - i0)
    for ci, cand in enumerate(cands):
        try:
            if len(targets) == 0:
                raise InsufficientSpan("empty validation span")
            predictor = method.fit(train_vals, cand, seed)
            preds = predictor.predict_targets(val_vals, targets)
            errs = preds - values[i1:e3]
            for k, ek in enumerate(ends):
                m = ek - i1
                if m <= 0:
                    raise InsufficientSpan(f"validation fold {k + 1} is empty")
                fold_rmse[ci, k] = float(np.sqrt(np.mean(errs[:m] ** 2)))
        except (HybridcastError, ValueError) as exc:
            fold_rmse[ci] = np.nan
            failures.append((ci, f"{type(exc).__name__}: {exc}"))
    mean_rmse = fold_rmse.mean(axis=1)
    ok = np.flatnonzero(np.isfinite(mean_rmse))
    if len(ok) == 0:
        detail = failures[0][1] if failures else "no finite scores"
        raise AllCandidatesFailed(
            f"all {len(cands)} candidates failed; first error: {detail}"
        )
    best = int(min(ok, key=lambda i: (mean_rmse[i], i)))
    return GridSearchReport(method=method.label, candidates=cands,
                            fold_rmse=fold_rmse, mean_rmse=mean_rmse,
                            best_index=best, failures=failures)


@dataclass
class LeakageAudit:
    """Date bookkeeping for every emitted forecast."""

    target_dates: np.ndarray
    input_end_dates: np.ndarray  # latest observation any feature touched
    fit_end_dates: np.ndarray    # last date inside the fit window

    def check(self) -> None:
        if len(self.target_dates) == 0:
            return
        if not np.all(self.input_end_dates < self.target_dates):
            raise LeakageDetected("a forecast consumed same-day or later data")
        if not np.all(self.fit_end_dates < self.target_dates):
            raise LeakageDetected("a forecast used a fit window reaching "
                                  "into its own test range")

    @property
    def ok(self) -> bool:
        try:
            self.check()
        except LeakageDetected:
            return False
        return True


@dataclass
class WindowResult:
    split: FoldSplit
    report: GridSearchReport
    chosen: dict
    n_forecasts: int


@dataclass
class WalkForwardResult:
    method: str
    dates: np.ndarray
    forecasts: np.ndarray
    actuals: np.ndarray
    windows: list[WindowResult]
    audit: LeakageAudit


def _window_seed(seed: int, w: int) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=(w,))
    return int(ss.generate_state(1)[0])


def run_walk_forward(series: ReturnSeries, plan: WindowPlan, method,
                     seed: int = 0,
                     splits: Sequence[FoldSplit] | None = None
                     ) -> WalkForwardResult:
    """Calibrate per window and emit one forecast per out-of-sample day.

    When test ranges overlap (step < test length) the earliest window owning
    a date produces its forecast.
    """
    if splits is None:
        splits = make_windows(plan, series)
    dates, values = series.dates, series.values
    taken = np.zeros(len(values), dtype=bool)
    all_idx: list[np.ndarray] = []
    all_preds: list[np.ndarray] = []
    fit_ends: list[np.ndarray] = []
    windows: list[WindowResult] = []
    for w, split in enumerate(splits):
        wseed = _window_seed(seed, w)
        report = grid_search(series, split, method, seed=wseed)
        cand = report.best_candidate
        i0 = _locate(dates, split.train_range[0])
        e3 = _locate(dates, split.val_ranges[-1][1])
        t0 = _locate(dates, split.test_range[0])
        t1 = _locate(dates, split.test_range[1])
        predictor = method.fit(values[i0:e3], cand, wseed)
        idx = np.arange(t0, t1)
        idx = idx[~taken[idx]]
        preds = predictor.predict_targets(values[i0:t1], idx - i0)
        taken[idx] = True
        all_idx.append(idx)
        all_preds.append(np.asarray(preds, dtype=np.float64))
        fit_ends.append(np.full(len(idx), dates[e3 - 1]))
        windows.append(WindowResult(split=split, report=report, chosen=cand,
                                    n_forecasts=len(idx)))
    idx = np.concatenate(all_idx) if all_idx else np.empty(0, dtype=np.intp)
    order = np.argsort(idx, kind="stable")
    idx = idx[order]
    preds = (np.concatenate(all_preds)[order] if all_idx else np.empty(0))
    fit_end = (np.concatenate(fit_ends)[order] if all_idx
               else np.empty(0, dtype=dates.dtype))
    audit = LeakageAudit(target_dates=dates[idx],
                         input_end_dates=dates[idx - 1],
                         fit_end_dates=fit_end)
    return WalkForwardResult(method=method.label, dates=dates[idx],
                             forecasts=preds, actuals=values[idx],
                             windows=windows, audit=audit)
