"""Experiment configuration: YAML loading, presets, validation.

A config names one or two assets (each a CSV of daily closes plus a window
plan), the list of forecasting methods to run, optional hyperparameter grid
overrides, a seed, and an output directory. Asset presets carry the window
geometry, transaction cost, and trading-day calendar so a minimal config
only points at the data files.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError
from .methods import ALL_METHOD_LABELS, merge_grids, parse_method
from .validation import WindowPlan, preset_plan

BUY_AND_HOLD = "Buy&Hold"

_BH_ALIASES = {"buyhold", "buyandhold", "bh", "bandh"}

ASSET_PRESETS = {
    "sp500": {"tc": 0.00005, "trading_days": 252},
    "bitcoin": {"tc": 0.0001, "trading_days": 365},
}


@dataclass(frozen=True)
class AssetConfig:
    name: str
    csv: Path
    plan: WindowPlan
    tc: float
    trading_days: int


@dataclass(frozen=True)
class ExperimentConfig:
    assets: tuple[AssetConfig, ...]
    methods: tuple[str, ...]  # canonical labels, Buy&Hold included
    grids: dict = field(default_factory=dict)
    seed: int = 0
    output_dir: Path = Path("output")

    @property
    def model_methods(self) -> tuple[str, ...]:
        return tuple(m for m in self.methods if m != BUY_AND_HOLD)


def canonical_method(text: str) -> str:
    """Map a config method string to its canonical table label."""
    if re.sub(r"[\s&_-]+", "", text).lower() in _BH_ALIASES:
        return BUY_AND_HOLD
    return parse_method(text).label


def _context(where: str, exc: Exception) -> ConfigError:
    return ConfigError(f"{where}: {exc}")


def _require(mapping, key, where: str):
    if not isinstance(mapping, dict) or key not in mapping:
        raise ConfigError(f"{where}: missing required field {key!r}")
    return mapping[key]


def _parse_plan(raw, where: str) -> WindowPlan:
    for k in ("train_months", "val_months", "test_months", "step_months",
              "start", "end"):
        _require(raw, k, where)
    extra = set(raw) - {"train_months", "val_months", "test_months",
                        "step_months", "start", "end"}
    if extra:
        raise ConfigError(f"{where}: unknown plan fields {sorted(extra)}")
    try:
        return WindowPlan(
            train_months=int(raw["train_months"]),
            val_months=tuple(int(v) for v in raw["val_months"]),
            test_months=int(raw["test_months"]),
            step_months=int(raw["step_months"]),
            start_date=np.datetime64(str(raw["start"])),
            end_date=np.datetime64(str(raw["end"])),
        )
    except (TypeError, ValueError) as exc:
        raise _context(where, exc) from exc


def _parse_asset(raw, index: int, base_dir: Path) -> AssetConfig:
    where = f"assets[{index}]"
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected a mapping")
    name = str(_require(raw, "name", where))
    csv = base_dir / str(_require(raw, "csv", where))
    preset = raw.get("preset")
    defaults: dict = {}
    plan = None
    if preset is not None:
        if preset not in ASSET_PRESETS:
            raise ConfigError(
                f"{where}.preset: unknown preset {preset!r}; "
                f"choose from {sorted(ASSET_PRESETS)}")
        defaults = dict(ASSET_PRESETS[preset])
        plan = preset_plan(preset)
    if "plan" in raw:
        plan = _parse_plan(raw["plan"], f"{where}.plan")
    if plan is None:
        raise ConfigError(f"{where}: needs either a preset or a plan")
    tc = raw.get("tc", defaults.get("tc"))
    trading_days = raw.get("trading_days", defaults.get("trading_days"))
    if tc is None or trading_days is None:
        raise ConfigError(
            f"{where}: tc and trading_days are required without a preset")
    tc = float(tc)
    if not 0.0 <= tc < 1.0:
        raise ConfigError(f"{where}.tc: must lie in [0, 1), got {tc}")
    trading_days = int(trading_days)
    if trading_days < 1:
        raise ConfigError(f"{where}.trading_days: must be positive")
    known = {"name", "csv", "preset", "plan", "tc", "trading_days"}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"{where}: unknown fields {sorted(extra)}")
    return AssetConfig(name=name, csv=csv, plan=plan, tc=tc,
                       trading_days=trading_days)


def _parse_methods(raw) -> tuple[str, ...]:
    if raw is None or raw == "all":
        return (BUY_AND_HOLD, *ALL_METHOD_LABELS)
    if not isinstance(raw, (list, tuple)) or not raw:
        raise ConfigError("methods: expected 'all' or a non-empty list")
    labels = []
    for i, text in enumerate(raw):
        try:
            labels.append(canonical_method(str(text)))
        except ValueError as exc:
            raise _context(f"methods[{i}]", exc) from exc
    dupes = {x for x in labels if labels.count(x) > 1}
    if dupes:
        raise ConfigError(f"methods: duplicate entries {sorted(dupes)}")
    return tuple(labels)


def load_config(path) -> ExperimentConfig:
    """Read and validate a YAML experiment file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    known = {"assets", "methods", "grids", "seed", "output_dir"}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"{path}: unknown fields {sorted(extra)}")
    assets_raw = _require(raw, "assets", str(path))
    if not isinstance(assets_raw, list) or not assets_raw:
        raise ConfigError(f"{path}: assets must be a non-empty list")
    if len(assets_raw) > 2:
        raise ConfigError(f"{path}: at most two assets are supported")
    base_dir = path.resolve().parent
    assets = tuple(_parse_asset(a, i, base_dir)
                   for i, a in enumerate(assets_raw))
    names = [a.name for a in assets]
    if len(set(names)) != len(names):
        raise ConfigError(f"{path}: asset names must be unique")
    methods = _parse_methods(raw.get("methods"))
    grids = raw.get("grids") or {}
    if not isinstance(grids, dict):
        raise ConfigError(f"{path}: grids must be a mapping")
    try:
        merge_grids(grids)  # validation only; methods re-merge on their own
    except (ValueError, TypeError) as exc:
        raise _context(f"{path}: grids", exc) from exc
    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError(f"{path}: seed must be an integer")
    out = Path(raw.get("output_dir", "output"))
    if not out.is_absolute():
        out = base_dir / out
    return ExperimentConfig(assets=assets, methods=methods, grids=grids,
                            seed=seed, output_dir=out)


def config_digest(path) -> str:
    """Stable identity of the experiment: file bytes, not parsed content."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
