"""Command-line front end: simulate a day, count schedules, inspect models.

Exit codes: 0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, figures
from .config import (
    ConfigError,
    build_bank,
    build_grid,
    build_tracking,
    load_config,
    validate_config,
)
from .dynamics import LoadBank, LoadSpec, make_dynamics, simulate_load, zoh_discretize
from .enumeration import (
    FAR,
    DecisionGrid,
    LoadSwitchState,
    SwitchSemantics,
    count_schedules,
    count_survey,
)
from .horizon import run_receding
from .profiles import (
    ProfileError,
    bundled_profile_path,
    normalize_peak,
    parse_csv,
    resample,
    write_day_record,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3


def _resolve_profile(name: str) -> Path:
    if name in ("clear", "cloudy"):
        return bundled_profile_path(name)
    p = Path(name)
    if not p.is_file():
        raise ProfileError(f"profile file not found: {p}")
    return p


def cmd_simulate(args) -> int:
    cfg = load_config(args.config, args.set or ())
    updates = {}
    if args.profile is not None:
        updates["profile"] = args.profile
    if args.out is not None:
        updates["output_dir"] = args.out
    if args.criterion is not None:
        updates["criterion"] = args.criterion
    if args.threads is not None:
        updates["threads"] = args.threads
    if args.no_figures:
        updates["figures"] = False
    if updates:
        cfg = replace(cfg, **updates)
        validate_config(cfg)

    bank = build_bank(cfg)
    tracking = build_tracking(cfg)
    profile_path = _resolve_profile(cfg.profile)
    series = normalize_peak(parse_csv(profile_path))
    profile = resample(series, cfg.dt_seconds, cfg.day_seconds)

    progress = None
    if not args.quiet:
        def progress(done, total):
            print(f"simulated {done / 3600.0:5.1f} / {total / 3600.0:.1f} h", file=sys.stderr)

    record = run_receding(profile, bank, tracking, threads=cfg.threads, progress=progress)
    record.config_echo.update(
        {
            "profile": str(profile_path),
            "profile_dropped_rows": series.dropped_rows,
            "output_dir": cfg.output_dir,
            "figures": cfg.figures,
        }
    )
    csv_path, summary_path = write_day_record(record, cfg.output_dir)
    written = [csv_path, summary_path]
    if cfg.figures:
        written += figures.save_day_figures(record, cfg.output_dir)
    for path in written:
        print(f"wrote {path}")
    for key in (
        "rmse",
        "supply_energy",
        "load_energy",
        "utilization",
        "negative_error_samples",
        "negative_error_outside_fallback",
        "fallback_epochs",
        "runtime_seconds",
    ):
        print(f"{key}: {record.metrics[key]}")
    return EXIT_OK


def _parse_int_list(text: str, n: int, what: str) -> list[int]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    try:
        vals = [int(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"{what}: expected integers, got {text!r}") from exc
    if len(vals) == 1 and n > 1:
        vals = vals * n
    if len(vals) != n:
        raise ConfigError(f"{what}: expected {n} values, got {len(vals)}")
    if any(v < 1 for v in vals):
        raise ConfigError(f"{what}: values must be >= 1")
    return vals


def _count_setup(args):
    """Resolve the load bank and grid for a counting experiment.

    ``--n-loads``/``--min-epochs`` build a synthetic epoch-level bank
    (dynamics are irrelevant to counting); otherwise the configured loads
    and decision period are used.
    """
    cfg = load_config(args.config, args.set or ())
    if args.n_loads is not None or args.min_epochs is not None:
        n = args.n_loads if args.n_loads is not None else len(cfg.loads)
        mins = _parse_int_list(args.min_epochs, n, "--min-epochs") if args.min_epochs else [1] * n
        horizon = args.horizon_epochs or build_grid(cfg).horizon_epochs
        unit = make_dynamics([-1.0])
        day_epochs = 4 * max([horizon] + mins)
        bank = LoadBank(
            loads=tuple(
                LoadSpec(index=i + 1, size=0.5, on_dynamics=unit, off_dynamics=unit,
                         min_on_samples=m, min_off_samples=m)
                for i, m in enumerate(mins)
            ),
            dt=1.0,
            day_seconds=float(day_epochs),
        )
        grid = DecisionGrid(dt=1.0, samples_per_epoch=1, horizon_epochs=horizon)
    else:
        bank = build_bank(cfg)
        base = build_grid(cfg)
        horizon = args.horizon_epochs or base.horizon_epochs
        grid = DecisionGrid(dt=base.dt, samples_per_epoch=base.samples_per_epoch, horizon_epochs=horizon)

    n = bank.n_loads
    if args.initial is not None:
        bits = args.initial.strip()
        if len(bits) != n or any(c not in "01" for c in bits):
            raise ConfigError(f"--initial must be {n} characters of 0/1, got {bits!r}")
        on_flags = [c == "1" for c in bits]
    else:
        on_flags = [False] * n
    dwells = (
        _parse_int_list(args.initial_dwell, n, "--initial-dwell")
        if args.initial_dwell
        else [FAR] * n
    )
    initial = [LoadSwitchState(on, dw) for on, dw in zip(on_flags, dwells)]
    day_end = args.epochs_to_day_end if args.epochs_to_day_end is not None else FAR
    return cfg, bank, grid, initial, day_end


def cmd_count(args) -> int:
    cfg, bank, grid, initial, day_end = _count_setup(args)
    if args.survey:
        print(
            f"n_loads={bank.n_loads} horizon_epochs={grid.horizon_epochs} "
            f"initial={''.join('1' if s.on else '0' for s in initial)}"
        )
        for settings, value in count_survey(initial, bank, grid, day_end):
            flags = " ".join(f"{k}={v}" for k, v in settings.items())
            print(f"{flags}: {value}")
        if args.reference is not None:
            print(f"reference: {args.reference}")
        return EXIT_OK
    semantics = SwitchSemantics(truncate_final_run=args.truncate, dwell_counting=args.dwell)
    value = count_schedules(initial, bank, grid, day_end, semantics, pin_first_epoch=args.pin_first)
    print(value)
    if args.reference is not None:
        print(f"reference: {args.reference}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    cfg = load_config(args.config, args.set or ())
    bank = build_bank(cfg)
    grid = build_grid(cfg)
    nd = grid.samples_per_epoch
    print(f"dt={cfg.dt_seconds:g}s decision={cfg.decision_period_seconds:g}s "
          f"horizon={cfg.horizon_seconds:g}s ({grid.horizon_epochs} epochs)")
    for ld in bank.loads:
        print(f"load {ld.index}: size {ld.size:g}  "
              f"min_on {ld.min_on_samples * bank.dt:g}s ({ld.min_on_samples // nd} epochs)  "
              f"min_off {ld.min_off_samples * bank.dt:g}s ({ld.min_off_samples // nd} epochs)")
        for branch, dyn in (("on", ld.on_dynamics), ("off", ld.off_dynamics)):
            disc = zoh_discretize(dyn, bank.dt)
            poles = ", ".join(
                f"{p.real:g}" if p.imag == 0 else f"{p.real:g}{p.imag:+g}j" for p in dyn.poles
            )
            a_flat = " ".join(f"{v:.9g}" for v in disc.a.ravel())
            b_flat = " ".join(f"{v:.9g}" for v in disc.b.ravel())
            print(f"  {branch}: poles [{poles}]  a [{a_flat}]  b [{b_flat}]  "
                  f"dc_gain {disc.dc_gain():.9f}")
        resp = _on_step_response(ld, bank.dt)
        print(f"  step: settle_2pct {_settle_samples(resp, ld.size)} samples  "
              f"overshoot {_overshoot_pct(resp, ld.size):.2f}%")
    if args.figures:
        path = figures.save_dynamics_figure(bank, Path(args.out) / "dynamics.png")
        print(f"wrote {path}")
    return EXIT_OK


def _on_step_response(ld: LoadSpec, dt: float) -> np.ndarray:
    slowest = max(1.0 / abs(p.real) for p in ld.on_dynamics.poles)
    steps = max(8, int(round(12.0 * slowest / dt)))
    return simulate_load(ld, dt, np.ones(steps, dtype=int), initial_power=0.0)


def _settle_samples(resp: np.ndarray, target: float) -> int:
    outside = np.nonzero(np.abs(resp - target) > 0.02 * target)[0]
    return int(outside[-1] + 1) if outside.size else 0


def _overshoot_pct(resp: np.ndarray, target: float) -> float:
    return max(0.0, (float(resp.max()) - target) / target * 100.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="solsched",
        description="Schedule on/off dynamic loads to track a solar power profile.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a full-day receding-horizon schedule")
    sim.add_argument("config", nargs="?", default=None, help="configuration file (defaults if omitted)")
    sim.add_argument("--profile", help="profile CSV path, or bundled name: clear, cloudy")
    sim.add_argument("--out", help="output directory")
    sim.add_argument("--criterion", choices=("least_squares", "barrier"))
    sim.add_argument("--threads", type=int, help="worker threads for candidate evaluation")
    sim.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    sim.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    sim.add_argument("--quiet", action="store_true", help="suppress hourly progress on stderr")
    sim.set_defaults(func=cmd_simulate)

    cnt = sub.add_parser("count", help="count admissible switching schedules")
    cnt.add_argument("config", nargs="?", default=None)
    cnt.add_argument("--horizon-epochs", type=int, help="decision epochs per horizon")
    cnt.add_argument("--n-loads", type=int, help="synthetic experiment: number of loads")
    cnt.add_argument("--min-epochs", help="synthetic experiment: per-load min dwell in epochs (comma list or one value)")
    cnt.add_argument("--initial", help="initial on/off bits, e.g. 010 (default all off)")
    cnt.add_argument("--initial-dwell", help="initial dwell epochs per load (default: saturated)")
    cnt.add_argument("--epochs-to-day-end", type=int, help="epochs left in the day (default: far)")
    cnt.add_argument("--pin-first", action="store_true", help="pin the first epoch to the initial combination")
    cnt.add_argument("--truncate", choices=("allow", "forbid"), default="allow")
    cnt.add_argument("--dwell", choices=("strict", "inclusive"), default="strict")
    cnt.add_argument("--survey", action="store_true", help="print counts under every convention combination")
    cnt.add_argument("--reference", type=int, help="externally reported count to print alongside")
    cnt.add_argument("--set", action="append", metavar="KEY=VALUE")
    cnt.set_defaults(func=cmd_count)

    ins = sub.add_parser("inspect", help="print discretized load models and dwell grids")
    ins.add_argument("config", nargs="?", default=None)
    ins.add_argument("--figures", action="store_true", help="also render the dynamics figure")
    ins.add_argument("--out", default=".", help="directory for the dynamics figure")
    ins.add_argument("--set", action="append", metavar="KEY=VALUE")
    ins.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ProfileError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
