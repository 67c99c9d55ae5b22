#!/usr/bin/env python3
"""Regenerate the bundled synthetic sample days (15-minute GHI curves).

Both files are synthetic stand-ins shaped like coastal San Diego summer
days: a smooth clear-sky bell peaking at 978.0 W/m2 at 13:00, and a
variable day with morning marine-layer overcast burning off into a
partly cloudy afternoon.  Output is deterministic (fixed RNG seed).
"""

from pathlib import Path

import numpy as np

DATA_DIR = Path(__file__).resolve().parent.parent / "src" / "solsched" / "data"
STEP = 900            # 15 minutes
SUNRISE = 21600.0     # 06:00
SUNSET = 72000.0      # 20:00
PEAK = 978.0          # W/m2 at 13:00 exactly (a grid point)


def clear_curve(t: np.ndarray) -> np.ndarray:
    phase = (t - SUNRISE) / (SUNSET - SUNRISE)
    up = (phase > 0.0) & (phase < 1.0)
    ghi = np.zeros_like(t)
    ghi[up] = PEAK * np.sin(np.pi * phase[up]) ** 1.2
    return ghi


def cloudy_attenuation(t: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    noon = 46800.0
    base = np.where(
        t < noon,
        0.38 + 0.47 * np.clip((t - SUNRISE) / (noon - SUNRISE), 0.0, 1.0) ** 2,
        0.85,
    )
    jitter = rng.uniform(-0.28, 0.22, size=t.shape)
    afternoon = t >= noon
    jitter[afternoon] = rng.uniform(-0.45, 0.15, size=int(afternoon.sum()))
    return np.clip(base + jitter, 0.12, 1.0)


def write(path: Path, t: np.ndarray, ghi: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write("time_s,ghi_wm2\n")
        for ti, gi in zip(t, ghi):
            fh.write(f"{int(ti)},{gi:.1f}\n")
    print(f"wrote {path} ({len(t)} rows, peak {ghi.max():.1f})")


def main() -> None:
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    t = np.arange(96, dtype=float) * STEP
    clear = clear_curve(t)
    write(DATA_DIR / "clearday.csv", t, np.round(clear, 1))

    rng = np.random.default_rng(20260810)
    cloudy = np.round(clear * cloudy_attenuation(t, rng), 1)
    write(DATA_DIR / "cloudyday.csv", t, cloudy)


if __name__ == "__main__":
    main()
