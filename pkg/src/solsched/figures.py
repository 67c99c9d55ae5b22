"""Figure rendering for day records and load dynamics.

Figures are rendered headless (Agg) straight to files next to the delimited
output; nothing here opens a window.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .dynamics import LoadBank, simulate_load
from .horizon import DayRecord

_LOAD_COLORS = ("tab:blue", "tab:orange", "tab:green", "tab:red", "tab:purple",
                "tab:brown", "tab:pink", "tab:gray")


def save_day_figures(record: DayRecord, out_dir) -> list[Path]:
    """Render tracking and per-load figures for a day record.

    Writes ``tracking.png`` (supply vs. aggregate demand, tracking error)
    and ``loads.png`` (per-load demand and switching commands).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    hours = record.time_s / 3600.0
    total = record.demand.sum(axis=0)

    fig, (ax_p, ax_e) = plt.subplots(2, 1, sharex=True, figsize=(9, 6),
                                     gridspec_kw={"height_ratios": [2, 1]})
    ax_p.plot(hours, record.supply, color="0.2", lw=1.2, label="supply $P$")
    ax_p.plot(hours, total, color="tab:red", lw=1.0, label="total demand")
    ax_p.fill_between(hours, 0, total, color="tab:red", alpha=0.12)
    ax_p.set_ylabel("normalized power")
    ax_p.legend(loc="upper left", frameon=False)
    ax_e.plot(hours, record.error, color="tab:purple", lw=0.8)
    ax_e.axhline(0.0, color="0.6", lw=0.6)
    ax_e.set_ylabel("error $e$")
    ax_e.set_xlabel("hour of day")
    fig.suptitle(f"tracking  (rmse {record.metrics['rmse']:.4f}, "
                 f"utilization {record.metrics['utilization']:.3f})")
    fig.tight_layout()
    tracking_path = out / "tracking.png"
    fig.savefig(tracking_path, dpi=130)
    plt.close(fig)

    n = record.bank.n_loads
    fig, (ax_d, ax_w) = plt.subplots(2, 1, sharex=True, figsize=(9, 6),
                                     gridspec_kw={"height_ratios": [2, 1]})
    for i, ld in enumerate(record.bank.loads):
        color = _LOAD_COLORS[i % len(_LOAD_COLORS)]
        ax_d.plot(hours, record.demand[i], color=color, lw=0.9,
                  label=f"load {ld.index} (x={ld.size:g})")
        ax_w.step(hours, record.commands[i] * 0.8 + (n - 1 - i), where="post",
                  color=color, lw=0.9)
    ax_d.plot(hours, record.supply, color="0.2", lw=0.8, alpha=0.6)
    ax_d.set_ylabel("per-load power")
    ax_d.legend(loc="upper left", frameon=False)
    ax_w.set_yticks([n - 1 - i + 0.4 for i in range(n)])
    ax_w.set_yticklabels([f"w_{ld.index}" for ld in record.bank.loads])
    ax_w.set_xlabel("hour of day")
    fig.suptitle("load schedules")
    fig.tight_layout()
    loads_path = out / "loads.png"
    fig.savefig(loads_path, dpi=130)
    plt.close(fig)
    return [tracking_path, loads_path]


def save_dynamics_figure(bank: LoadBank, path, seconds: float | None = None) -> Path:
    """Render each load's on-step (from rest) and off-step (from steady) response."""
    if seconds is None:
        slowest = max(
            1.0 / min(abs(p.real) for p in dyn.poles)
            for ld in bank.loads
            for dyn in (ld.on_dynamics, ld.off_dynamics)
        )
        seconds = 8.0 * slowest
    steps = max(1, int(round(seconds / bank.dt)))
    t = np.arange(steps + 1) * bank.dt

    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
    for i, ld in enumerate(bank.loads):
        color = _LOAD_COLORS[i % len(_LOAD_COLORS)]
        on_resp = simulate_load(ld, bank.dt, np.ones(steps, dtype=int), initial_power=0.0)
        off_resp = simulate_load(ld, bank.dt, np.zeros(steps, dtype=int), initial_power=ld.size)
        axes[0].plot(t, on_resp, color=color, label=f"load {ld.index}")
        axes[0].axhline(ld.size, color=color, lw=0.5, ls=":")
        axes[1].plot(t, off_resp, color=color)
    axes[0].set_title("turn-on from rest")
    axes[1].set_title("turn-off from steady demand")
    for ax in axes:
        ax.set_xlabel("seconds")
    axes[0].set_ylabel("power demand")
    axes[0].legend(frameon=False)
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
