"""Solar profile ingestion, normalization, resampling, and day-record output.

Input files are comma-separated with a header row; the first column is time
(numeric seconds-of-day or ISO-8601) and the second the power/irradiance
reading in native units.  Rows with missing, unparseable, or negative values
are dropped and counted.  Normalization divides by the peak, so plant
scaling and GHI-to-power conversion are absorbed into the unitless curve.

Day records are written as one CSV (one row per simulation sample) plus a
flat key-value summary.  Float columns use the shortest representation that
parses back to the identical double, so a write/parse round trip is exact.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__ as _engine_version
from .horizon import DayRecord, PowerProfile


class ProfileError(ValueError):
    """Raised for unusable profile data (maps to the data-error exit code)."""


def bundled_profile_path(name: str) -> Path:
    """Path of a bundled sample day ("clear" or "cloudy").

    The bundled days are synthetic stand-ins shaped like coastal San Diego
    irradiance curves, 96 rows at 15-minute spacing.
    """
    fname = {"clear": "clearday.csv", "cloudy": "cloudyday.csv"}.get(name)
    if fname is None:
        raise ProfileError(f"unknown bundled profile {name!r}; choose 'clear' or 'cloudy'")
    return Path(str(resources.files("solsched").joinpath("data", fname)))


@dataclass(eq=False)
class RawSeries:
    """Cleaned, possibly irregular time series in native units."""

    times: np.ndarray   # seconds of day, strictly increasing
    values: np.ndarray
    dropped_rows: int = 0

    def __post_init__(self):
        t = np.ascontiguousarray(self.times, dtype=float)
        v = np.ascontiguousarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size == 0:
            raise ProfileError("series needs matching, non-empty time and value arrays")
        if not (np.isfinite(t).all() and np.isfinite(v).all()):
            raise ProfileError("series contains non-finite entries")
        if np.any(np.diff(t) <= 0.0):
            bad = int(np.nonzero(np.diff(t) <= 0.0)[0][0]) + 1
            raise ProfileError(f"timestamps are not strictly increasing at point {bad} (t={t[bad]:g})")
        if np.any(v < 0.0):
            raise ProfileError("series contains negative values after cleaning")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.times.size


def _parse_time(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        pass
    stamp = _dt.datetime.fromisoformat(text)
    return (
        stamp.hour * 3600.0
        + stamp.minute * 60.0
        + stamp.second
        + stamp.microsecond / 1e6
    )


def parse_csv(data) -> RawSeries:
    """Parse a delimited time/value file into a cleaned :class:`RawSeries`.

    ``data`` may be bytes, text, or a path.  The first row is the header;
    the first two columns are used.  Dropped-row counts (missing, negative,
    or unparseable values) are reported on the result.
    """
    if isinstance(data, (str, Path)) and "\n" not in str(data):
        data = Path(data).read_bytes()
    if isinstance(data, bytes):
        text = data.decode("utf-8")
    else:
        text = str(data)

    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r and any(cell.strip() for cell in r)]
    if len(rows) < 2:
        raise ProfileError("no data rows found below the header")
    bad_lines: list[int] = []
    times: list[float] = []
    values: list[float] = []
    dropped = 0
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) < 2:
            dropped += 1
            bad_lines.append(lineno)
            continue
        t_text, v_text = row[0].strip(), row[1].strip()
        try:
            t = _parse_time(t_text)
        except ValueError:
            dropped += 1
            bad_lines.append(lineno)
            continue
        if not v_text:
            dropped += 1
            bad_lines.append(lineno)
            continue
        try:
            v = float(v_text)
        except ValueError:
            dropped += 1
            bad_lines.append(lineno)
            continue
        if not (np.isfinite(t) and np.isfinite(v)) or v < 0.0:
            dropped += 1
            bad_lines.append(lineno)
            continue
        times.append(t)
        values.append(v)
    if not times:
        shown = ", ".join(str(x) for x in bad_lines[:5])
        raise ProfileError(f"no parseable rows (first offending lines: {shown})")
    arr_t = np.array(times)
    if np.any(np.diff(arr_t) <= 0.0):
        bad = int(np.nonzero(np.diff(arr_t) <= 0.0)[0][0]) + 1
        raise ProfileError(f"time column is not strictly increasing at data row {bad + 1} (t={arr_t[bad]:g})")
    return RawSeries(times=arr_t, values=np.array(values), dropped_rows=dropped)


def normalize_peak(series: RawSeries) -> RawSeries:
    """Scale so the maximum value is exactly 1.  Idempotent."""
    peak = float(series.values.max())
    if peak <= 0.0:
        raise ProfileError("cannot normalize an all-zero series")
    return RawSeries(times=series.times, values=series.values / peak, dropped_rows=series.dropped_rows)


def resample(series: RawSeries, dt: float, day_seconds: float) -> PowerProfile:
    """Linear interpolation onto the uniform simulation grid.

    Values before the first and after the last point clamp to the edge
    values; grid points landing exactly on knots reproduce them exactly.
    """
    if len(series) == 0:
        raise ProfileError("cannot resample an empty series")
    if not dt > 0.0:
        raise ProfileError(f"sample time must be positive, got {dt}")
    ratio = day_seconds / dt
    if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
        raise ProfileError(f"day length {day_seconds} is not a positive multiple of dt {dt}")
    grid = np.arange(int(round(ratio)) + 1) * dt
    return PowerProfile(samples=np.interp(grid, series.times, series.values), dt=dt)


def _fmt(x: float) -> str:
    """Shortest decimal text that parses back to the identical double."""
    return repr(float(x))


def day_record_csv_header(record: DayRecord) -> list[str]:
    cols = ["time_s", "P", "e"]
    for ld in record.bank.loads:
        cols.append(f"w_{ld.index}")
        cols.append(f"p_{ld.index}")
    return cols


def write_day_record(record: DayRecord, out_dir) -> tuple[Path, Path]:
    """Write the per-sample CSV and the key-value summary; returns both paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "day_record.csv"
    summary_path = out / "summary.txt"

    n_samples = record.time_s.size
    with open(csv_path, "w", newline="") as fh:
        fh.write(",".join(day_record_csv_header(record)) + "\n")
        for k in range(n_samples):
            cells = [_fmt(record.time_s[k]), _fmt(record.supply[k]), _fmt(record.error[k])]
            for i in range(record.bank.n_loads):
                cells.append(str(int(record.commands[i, k])))
                cells.append(_fmt(record.demand[i, k]))
            fh.write(",".join(cells) + "\n")

    with open(summary_path, "w") as fh:
        fh.write(f"engine_version: {_engine_version}\n")
        for key, val in sorted(record.config_echo.items()):
            fh.write(f"config.{key}: {val}\n")
        for key, val in sorted(record.metrics.items()):
            fh.write(f"metrics.{key}: {val}\n")
    return csv_path, summary_path


def read_day_record_csv(path) -> dict[str, np.ndarray]:
    """Parse a day-record CSV back into named float columns."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(c) for c in row] for row in reader]
    arr = np.array(rows)
    if arr.ndim != 2 or arr.shape[1] != len(header):
        raise ProfileError(f"malformed day-record CSV {path}")
    return {name: arr[:, j].copy() for j, name in enumerate(header)}
