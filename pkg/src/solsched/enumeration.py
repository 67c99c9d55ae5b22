"""Generation and counting of admissible binary switching schedules.

Decisions are made on a coarse epoch grid (``samples_per_epoch`` simulation
samples per epoch).  A schedule over a horizon of ``H`` epochs is an n-by-H
binary matrix; it is admissible when every load respects its minimum on/off
dwell (counted in epochs, including history carried in from before the
horizon) and no load turns on so late that its minimum on time would run
past the end of the day.

Because admissibility never couples loads, the admissible set is the
cartesian product of per-load admissible rows, and its size is the product
of per-load counts.  Enumeration order is canonical: depth-first by epoch,
actions sorted lexicographically by load index with 0 before 1, so the
emitted sequence is the lexicographic order of the epoch-major flattening.

Two documented convention switches exist because run-length accounting near
the horizon boundary is ambiguous in combinatorial reports of this scheme
(see :class:`SwitchSemantics`).  The scheduling engine always uses the
defaults (``truncate_final_run="allow"``, ``dwell_counting="strict"``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .dynamics import LoadBank

#: Effectively-infinite epoch count for "far from day end" and for dwell
#: counters of loads that have never switched.
FAR = 10**9

_TRUNCATE_VALUES = ("allow", "forbid")
_DWELL_VALUES = ("strict", "inclusive")


@dataclass(frozen=True)
class DecisionGrid:
    """Decision-epoch grid layered on the simulation sample grid."""

    dt: float
    samples_per_epoch: int
    horizon_epochs: int

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError(f"sample time must be positive, got {self.dt}")
        if self.samples_per_epoch < 1:
            raise ValueError(f"samples per epoch must be >= 1, got {self.samples_per_epoch}")
        if self.horizon_epochs < 1:
            raise ValueError(f"horizon must be >= 1 epoch, got {self.horizon_epochs}")

    @property
    def epoch_seconds(self) -> float:
        return self.samples_per_epoch * self.dt

    @property
    def horizon_seconds(self) -> float:
        return self.horizon_epochs * self.epoch_seconds


@dataclass(frozen=True)
class LoadSwitchState:
    """On/off status of one load plus how long it has held it, in epochs.

    The dwell counter includes history from before the current horizon and
    saturates; a load that has never been commanded carries ``FAR``.
    """

    on: bool
    dwell_epochs: int

    def __post_init__(self):
        if self.dwell_epochs < 1:
            raise ValueError(f"dwell count must be >= 1 epoch, got {self.dwell_epochs}")

    @staticmethod
    def initial_off() -> "LoadSwitchState":
        """Day-start state: off with saturated dwell (off for all prior time)."""
        return LoadSwitchState(on=False, dwell_epochs=FAR)


@dataclass(frozen=True)
class SwitchSemantics:
    """Convention switches for run-length accounting at the horizon edges.

    truncate_final_run:
        "allow" (default): a run still open at the last horizon epoch is not
        required to have met its minimum; the future beyond the horizon can
        complete it.  "forbid": a flip is admissible only if the new run can
        meet its minimum inside the horizon.
    dwell_counting:
        "strict" (default): a flip requires the outgoing run to span at
        least its full minimum epoch count, as the discrete switching rules
        state.  "inclusive": the epoch of the next switch is counted as part
        of the outgoing run, lowering every dwell threshold by one.
    """

    truncate_final_run: str = "allow"
    dwell_counting: str = "strict"

    def __post_init__(self):
        if self.truncate_final_run not in _TRUNCATE_VALUES:
            raise ValueError(f"truncate_final_run must be one of {_TRUNCATE_VALUES}")
        if self.dwell_counting not in _DWELL_VALUES:
            raise ValueError(f"dwell_counting must be one of {_DWELL_VALUES}")

    def threshold(self, min_epochs: int) -> int:
        if self.dwell_counting == "strict":
            return min_epochs
        return max(1, min_epochs - 1)


DEFAULT_SEMANTICS = SwitchSemantics()


class ScheduleMatrix:
    """Immutable n-by-H binary decision matrix (one row per load)."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        arr = np.ascontiguousarray(entries, dtype=np.uint8)
        if arr.ndim != 2:
            raise ValueError(f"schedule must be a 2-D matrix, got shape {arr.shape}")
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("schedule entries must be binary")
        arr.setflags(write=False)
        self.entries = arr

    @property
    def n_loads(self) -> int:
        return self.entries.shape[0]

    @property
    def horizon_epochs(self) -> int:
        return self.entries.shape[1]

    def row(self, i: int) -> tuple[int, ...]:
        return tuple(int(v) for v in self.entries[i])

    def __eq__(self, other) -> bool:
        if not isinstance(other, ScheduleMatrix):
            return NotImplemented
        return self.entries.shape == other.entries.shape and bool(
            np.array_equal(self.entries, other.entries)
        )

    def __hash__(self) -> int:
        return hash((self.entries.shape, self.entries.tobytes()))

    def __repr__(self) -> str:
        rows = ["".join(str(int(v)) for v in r) for r in self.entries]
        return f"ScheduleMatrix({'|'.join(rows)})"


def epoch_minimums(bank: LoadBank, grid: DecisionGrid) -> list[tuple[int, int]]:
    """Per-load (min_on, min_off) dwell counts converted to whole epochs.

    Rejects any load whose minimum dwell is not an integer multiple of the
    decision period; epoch-level accounting would otherwise misstate it.
    """
    if abs(grid.dt - bank.dt) > 1e-12:
        raise ValueError(f"grid sample time {grid.dt} != bank sample time {bank.dt}")
    mins = []
    for ld in bank.loads:
        pair = []
        for name, samples in (("min_on", ld.min_on_samples), ("min_off", ld.min_off_samples)):
            if samples % grid.samples_per_epoch != 0:
                raise ValueError(
                    f"load {ld.index}: {name} ({samples} samples) is not a multiple of the "
                    f"decision period ({grid.samples_per_epoch} samples)"
                )
            pair.append(samples // grid.samples_per_epoch)
        mins.append((pair[0], pair[1]))
    return mins


def _load_options(
    on: bool,
    dwell: int,
    min_on: int,
    min_off: int,
    epochs_to_day_end: int,
    semantics: SwitchSemantics,
    epochs_left_in_horizon: int | None = None,
) -> tuple[int, ...]:
    """Admissible next-epoch commands for one load, 0 before 1.

    Holding the current command is always admissible.  ``epochs_to_day_end``
    counts the decided epoch itself; a turn-on needs at least ``min_on``
    epochs of day left.  ``epochs_left_in_horizon`` (also inclusive) is only
    supplied under the "forbid" truncation convention.
    """
    hold = 1 if on else 0
    flip = 1 - hold
    leaving = min_on if on else min_off
    can_flip = dwell >= semantics.threshold(leaving)
    if can_flip and not on and epochs_to_day_end < min_on:
        can_flip = False  # too close to day end to honor the minimum on time
    if can_flip and semantics.truncate_final_run == "forbid" and epochs_left_in_horizon is not None:
        entering = min_off if on else min_on
        if epochs_left_in_horizon < semantics.threshold(entering):
            can_flip = False
    if not can_flip:
        return (hold,)
    return (0, 1)


def _advance(state: tuple[bool, int], bit: int, cap: int) -> tuple[bool, int]:
    on, dwell = state
    if bool(bit) == on:
        return (on, min(dwell + 1, cap))
    return (bool(bit), 1)


def _clamped_states(initial, caps) -> list[tuple[bool, int]]:
    return [(st.on, min(st.dwell_epochs, cap)) for st, cap in zip(initial, caps)]


def admissible_actions(
    states: list[LoadSwitchState],
    epochs_to_day_end: int,
    bank: LoadBank,
    grid: DecisionGrid,
    semantics: SwitchSemantics = DEFAULT_SEMANTICS,
) -> list[tuple[int, ...]]:
    """All per-load command vectors reachable in one decision epoch.

    Returned in canonical order (lexicographic by load index, 0 before 1).
    """
    if len(states) != bank.n_loads:
        raise ValueError(f"expected {bank.n_loads} load states, got {len(states)}")
    if epochs_to_day_end < 0:
        raise ValueError(f"epochs to day end must be >= 0, got {epochs_to_day_end}")
    mins = epoch_minimums(bank, grid)
    per_load = [
        _load_options(st.on, st.dwell_epochs, mo, mf, epochs_to_day_end, semantics)
        for st, (mo, mf) in zip(states, mins)
    ]
    return list(itertools.product(*per_load))


def _enumerate_load_rows(
    init: tuple[bool, int],
    min_on: int,
    min_off: int,
    horizon: int,
    epochs_to_day_end: int,
    semantics: SwitchSemantics,
    pin_first_epoch: bool,
) -> list[tuple[int, ...]]:
    """All admissible single-load rows over the horizon, in canonical order."""
    cap = max(min_on, min_off)
    rows: list[tuple[int, ...]] = []
    stack_row: list[int] = []

    def rec(m: int, state: tuple[bool, int]):
        if m == horizon:
            rows.append(tuple(stack_row))
            return
        if m == 0 and pin_first_epoch:
            options: tuple[int, ...] = (1 if state[0] else 0,)
        else:
            options = _load_options(
                state[0], state[1], min_on, min_off,
                epochs_to_day_end - m, semantics,
                epochs_left_in_horizon=horizon - m,
            )
        for bit in options:
            stack_row.append(bit)
            rec(m + 1, _advance(state, bit, cap))
            stack_row.pop()

    rec(0, (init[0], min(init[1], cap)))
    return rows


def enumerate_schedules(
    initial: list[LoadSwitchState],
    bank: LoadBank,
    grid: DecisionGrid,
    epochs_to_day_end: int = FAR,
    semantics: SwitchSemantics = DEFAULT_SEMANTICS,
    pin_first_epoch: bool = False,
):
    """Lazily yield every admissible :class:`ScheduleMatrix`, canonically ordered.

    Depth-first over epochs, chaining one-epoch admissible actions and
    updating dwell counters; each admissible matrix is emitted exactly once,
    in lexicographic order of the epoch-major flattening (0 before 1).
    """
    if len(initial) != bank.n_loads:
        raise ValueError(f"expected {bank.n_loads} load states, got {len(initial)}")
    if epochs_to_day_end < 0:
        raise ValueError(f"epochs to day end must be >= 0, got {epochs_to_day_end}")
    mins = epoch_minimums(bank, grid)
    caps = [max(mo, mf) for mo, mf in mins]
    horizon = grid.horizon_epochs
    states0 = _clamped_states(initial, caps)
    actions: list[tuple[int, ...]] = []

    def options_at(m: int, states) -> itertools.product:
        if m == 0 and pin_first_epoch:
            return iter([tuple(1 if on else 0 for on, _ in states)])
        per_load = [
            _load_options(
                on, dwell, mo, mf,
                epochs_to_day_end - m, semantics,
                epochs_left_in_horizon=horizon - m,
            )
            for (on, dwell), (mo, mf) in zip(states, mins)
        ]
        return itertools.product(*per_load)

    def rec(m: int, states):
        if m == horizon:
            yield ScheduleMatrix(np.array(actions, dtype=np.uint8).T)
            return
        for action in options_at(m, states):
            actions.append(action)
            yield from rec(m + 1, [_advance(st, bit, cap) for st, bit, cap in zip(states, action, caps)])
            actions.pop()

    yield from rec(0, states0)


def _count_load_rows(
    init: tuple[bool, int],
    min_on: int,
    min_off: int,
    horizon: int,
    epochs_to_day_end: int,
    semantics: SwitchSemantics,
    pin_first_epoch: bool,
) -> int:
    """Count admissible single-load rows by dynamic programming over (on, dwell)."""
    cap = max(min_on, min_off)
    counts: dict[tuple[bool, int], int] = {(init[0], min(init[1], cap)): 1}
    for m in range(horizon):
        nxt: dict[tuple[bool, int], int] = {}
        for (on, dwell), c in counts.items():
            if m == 0 and pin_first_epoch:
                options: tuple[int, ...] = (1 if on else 0,)
            else:
                options = _load_options(
                    on, dwell, min_on, min_off,
                    epochs_to_day_end - m, semantics,
                    epochs_left_in_horizon=horizon - m,
                )
            for bit in options:
                key = _advance((on, dwell), bit, cap)
                nxt[key] = nxt.get(key, 0) + c
        counts = nxt
    return sum(counts.values())


def count_schedules(
    initial: list[LoadSwitchState],
    bank: LoadBank,
    grid: DecisionGrid,
    epochs_to_day_end: int = FAR,
    semantics: SwitchSemantics = DEFAULT_SEMANTICS,
    pin_first_epoch: bool = False,
) -> int:
    """Exact cardinality of :func:`enumerate_schedules` without materializing it.

    Admissibility never couples loads, so the total is the product of
    per-load row counts, each obtained by a dynamic program over the
    (status, dwell) tuples.
    """
    if len(initial) != bank.n_loads:
        raise ValueError(f"expected {bank.n_loads} load states, got {len(initial)}")
    if epochs_to_day_end < 0:
        raise ValueError(f"epochs to day end must be >= 0, got {epochs_to_day_end}")
    mins = epoch_minimums(bank, grid)
    total = 1
    for st, (mo, mf) in zip(initial, mins):
        total *= _count_load_rows(
            (st.on, st.dwell_epochs), mo, mf, grid.horizon_epochs,
            epochs_to_day_end, semantics, pin_first_epoch,
        )
    return total


def count_survey(
    initial: list[LoadSwitchState],
    bank: LoadBank,
    grid: DecisionGrid,
    epochs_to_day_end: int = FAR,
) -> list[tuple[dict, int]]:
    """Counts under every documented convention combination.

    Returns (settings, count) pairs over pin_first_epoch x truncate_final_run
    x dwell_counting, for side-by-side comparison with externally reported
    figures whose accounting convention is unknown.
    """
    out = []
    for pin in (False, True):
        for trunc in _TRUNCATE_VALUES:
            for dwell in _DWELL_VALUES:
                sem = SwitchSemantics(truncate_final_run=trunc, dwell_counting=dwell)
                n = count_schedules(initial, bank, grid, epochs_to_day_end, sem, pin)
                out.append(
                    (
                        {
                            "pin_first_epoch": pin,
                            "truncate_final_run": trunc,
                            "dwell_counting": dwell,
                        },
                        n,
                    )
                )
    return out
