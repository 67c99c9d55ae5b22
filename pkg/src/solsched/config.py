"""Run configuration: a flat key-path text format with case-study defaults.

The config file is declarative text, one ``key = value`` per line, ``#``
comments allowed.  Load entries use dotted paths (``load.1.size``).  The
built-in defaults reproduce the three-load case study: 1 s sampling, 60 s
decision period, 360 s horizon, sizes 0.60 / 0.2586 / 0.1222, minimum on/off
times 180 / 240 / 300 s, barrier criterion.

Command-line ``--set key=value`` pairs shadow file keys; dedicated flags
(``--profile``, ``--out``, ...) shadow both.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .dynamics import LoadBank, LoadSpec, make_dynamics
from .enumeration import DecisionGrid, SwitchSemantics
from .horizon import TrackingConfig


class ConfigError(ValueError):
    """Raised for invalid configuration (maps to the config-error exit code)."""


@dataclass(frozen=True)
class LoadDef:
    size: float
    poles_on: tuple[complex, ...]
    poles_off: tuple[complex, ...]
    min_on_seconds: float
    min_off_seconds: float
    off_level: float = 0.0


@dataclass(frozen=True)
class RunConfig:
    dt_seconds: float = 1.0
    decision_period_seconds: float = 60.0
    horizon_seconds: float = 360.0
    day_seconds: float = 86400.0
    criterion: str = "barrier"
    cost_sampling: str = "per_sample"
    truncate_final_run: str = "allow"
    dwell_counting: str = "strict"
    profile: str = "clear"
    output_dir: str = "out"
    threads: int = 1
    figures: bool = True
    loads: tuple[LoadDef, ...] = field(default_factory=lambda: _DEFAULT_LOADS)


_DEFAULT_LOADS = (
    LoadDef(size=0.60, poles_on=(-0.01,), poles_off=(-0.04,), min_on_seconds=180.0, min_off_seconds=180.0),
    LoadDef(size=0.2586, poles_on=(-0.05 + 0.06j, -0.05 - 0.06j), poles_off=(-0.05,),
            min_on_seconds=240.0, min_off_seconds=240.0),
    LoadDef(size=0.1222, poles_on=(-0.02,), poles_off=(-0.02,), min_on_seconds=300.0, min_off_seconds=300.0),
)

_SCALAR_FIELDS = {
    "dt_seconds": float,
    "decision_period_seconds": float,
    "horizon_seconds": float,
    "day_seconds": float,
    "criterion": str,
    "cost_sampling": str,
    "truncate_final_run": str,
    "dwell_counting": str,
    "profile": str,
    "output_dir": str,
    "threads": int,
    "figures": bool,
}

_LOAD_FIELDS = {
    "size": float,
    "poles_on": "poles",
    "poles_off": "poles",
    "min_on_seconds": float,
    "min_off_seconds": float,
    "off_level": float,
}

_LOAD_KEY = re.compile(r"^load\.(\d+)\.([a-z_]+)$")


def default_config() -> RunConfig:
    return RunConfig()


def _parse_bool(text: str, key: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def _parse_poles(text: str, key: str) -> tuple[complex, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ConfigError(f"{key}: expected at least one pole")
    poles = []
    for p in parts:
        try:
            poles.append(complex(p.replace(" ", "")))
        except ValueError as exc:
            raise ConfigError(f"{key}: cannot parse pole {p!r}") from exc
    return tuple(poles)


def _convert(value: str, kind, key: str):
    if kind is bool:
        return _parse_bool(value, key)
    if kind == "poles":
        return _parse_poles(value, key)
    try:
        if kind is int:
            return int(value.strip())
        if kind is float:
            return float(value.strip())
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {value!r} as {kind.__name__}") from exc
    return value.strip()


def _parse_pairs(lines, origin: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value.strip()
    return pairs


def _apply_pairs(cfg: RunConfig, pairs: dict[str, str]) -> RunConfig:
    scalars = {}
    load_dicts: dict[int, dict] = {}
    for key, value in pairs.items():
        if key in _SCALAR_FIELDS:
            scalars[key] = _convert(value, _SCALAR_FIELDS[key], key)
            continue
        m = _LOAD_KEY.match(key)
        if m:
            idx, fieldname = int(m.group(1)), m.group(2)
            if fieldname not in _LOAD_FIELDS:
                raise ConfigError(f"unknown load field {key!r}")
            load_dicts.setdefault(idx, {})[fieldname] = _convert(value, _LOAD_FIELDS[fieldname], key)
            continue
        raise ConfigError(f"unknown configuration key {key!r}")

    loads = cfg.loads
    if load_dicts:
        indices = sorted(load_dicts)
        required = ("size", "poles_on", "poles_off", "min_on_seconds", "min_off_seconds")
        defines_bank = any(all(f in d for f in required) for d in load_dicts.values())
        if defines_bank:
            # fully specified loads replace the whole bank
            if indices != list(range(1, len(indices) + 1)):
                raise ConfigError(f"load indices must be contiguous from 1, got {indices}")
            new_loads = []
            for i in indices:
                missing = [f for f in required if f not in load_dicts[i]]
                if missing:
                    raise ConfigError(f"load.{i}: missing required fields {missing}")
                new_loads.append(LoadDef(**load_dicts[i]))
            loads = tuple(new_loads)
        else:
            # partial fields adjust the loads already in effect
            if max(indices) > len(loads):
                raise ConfigError(
                    f"load.{max(indices)} refers past the {len(loads)} configured loads; "
                    f"defining a new load requires all of {list(required)}"
                )
            merged = list(loads)
            for i in indices:
                merged[i - 1] = replace(merged[i - 1], **load_dicts[i])
            loads = tuple(merged)
    return replace(cfg, **scalars, loads=loads)


def load_config(path=None, overrides=()) -> RunConfig:
    """Read a configuration file (defaults when ``path`` is None) and apply overrides.

    ``overrides`` are ``key=value`` strings with the same syntax as file
    lines; they shadow file keys.
    """
    cfg = default_config()
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"configuration file not found: {p}")
        cfg = _apply_pairs(cfg, _parse_pairs(p.read_text().splitlines(), str(p)))
    if overrides:
        cfg = _apply_pairs(cfg, _parse_pairs(list(overrides), "--set"))
    validate_config(cfg)
    return cfg


def _require_multiple(value: float, base: float, key: str, base_name: str) -> int:
    if base <= 0:
        raise ConfigError(f"{base_name} must be positive")
    ratio = value / base
    if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
        raise ConfigError(f"{key} ({value:g} s) is not a positive multiple of {base_name} ({base:g} s)")
    return int(round(ratio))


def validate_config(cfg: RunConfig) -> None:
    if cfg.dt_seconds <= 0:
        raise ConfigError(f"dt_seconds must be positive, got {cfg.dt_seconds}")
    if cfg.threads < 1:
        raise ConfigError(f"threads must be >= 1, got {cfg.threads}")
    _require_multiple(cfg.decision_period_seconds, cfg.dt_seconds, "decision_period_seconds", "dt_seconds")
    _require_multiple(cfg.horizon_seconds, cfg.decision_period_seconds, "horizon_seconds", "decision_period_seconds")
    _require_multiple(cfg.day_seconds, cfg.decision_period_seconds, "day_seconds", "decision_period_seconds")
    if cfg.criterion not in ("least_squares", "barrier"):
        raise ConfigError(f"criterion must be least_squares or barrier, got {cfg.criterion!r}")
    if cfg.cost_sampling not in ("per_sample", "epoch"):
        raise ConfigError(f"cost_sampling must be per_sample or epoch, got {cfg.cost_sampling!r}")
    if cfg.truncate_final_run not in ("allow", "forbid"):
        raise ConfigError(f"truncate_final_run must be allow or forbid, got {cfg.truncate_final_run!r}")
    if cfg.dwell_counting not in ("strict", "inclusive"):
        raise ConfigError(f"dwell_counting must be strict or inclusive, got {cfg.dwell_counting!r}")
    if not cfg.loads:
        raise ConfigError("at least one load must be defined")
    for i, ld in enumerate(cfg.loads, start=1):
        if not 0.0 < ld.size <= 1.0:
            raise ConfigError(f"load.{i}.size must be in (0, 1], got {ld.size}")
        for name, val in (("min_on_seconds", ld.min_on_seconds), ("min_off_seconds", ld.min_off_seconds)):
            _require_multiple(val, cfg.dt_seconds, f"load.{i}.{name}", "dt_seconds")
            _require_multiple(val, cfg.decision_period_seconds, f"load.{i}.{name}", "decision_period_seconds")
        for name, poles in (("poles_on", ld.poles_on), ("poles_off", ld.poles_off)):
            try:
                make_dynamics(poles)
            except ValueError as exc:
                raise ConfigError(f"load.{i}.{name}: {exc}") from exc


def build_bank(cfg: RunConfig) -> LoadBank:
    specs = []
    for i, ld in enumerate(cfg.loads, start=1):
        specs.append(
            LoadSpec(
                index=i,
                size=ld.size,
                on_dynamics=make_dynamics(ld.poles_on),
                off_dynamics=make_dynamics(ld.poles_off),
                min_on_samples=_require_multiple(ld.min_on_seconds, cfg.dt_seconds, f"load.{i}.min_on_seconds", "dt_seconds"),
                min_off_samples=_require_multiple(ld.min_off_seconds, cfg.dt_seconds, f"load.{i}.min_off_seconds", "dt_seconds"),
                off_level=ld.off_level,
            )
        )
    try:
        return LoadBank(loads=tuple(specs), dt=cfg.dt_seconds, day_seconds=cfg.day_seconds)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_grid(cfg: RunConfig) -> DecisionGrid:
    return DecisionGrid(
        dt=cfg.dt_seconds,
        samples_per_epoch=_require_multiple(cfg.decision_period_seconds, cfg.dt_seconds,
                                            "decision_period_seconds", "dt_seconds"),
        horizon_epochs=_require_multiple(cfg.horizon_seconds, cfg.decision_period_seconds,
                                         "horizon_seconds", "decision_period_seconds"),
    )


def build_tracking(cfg: RunConfig) -> TrackingConfig:
    return TrackingConfig(
        grid=build_grid(cfg),
        criterion=cfg.criterion,
        cost_sampling=cfg.cost_sampling,
        semantics=SwitchSemantics(
            truncate_final_run=cfg.truncate_final_run,
            dwell_counting=cfg.dwell_counting,
        ),
    )
