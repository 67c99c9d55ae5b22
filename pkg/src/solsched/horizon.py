"""Receding-horizon tracking optimization over the admissible schedule set.

Every decision epoch the engine enumerates the admissible switching
schedules from the live load states, simulates each candidate at the
simulation sample rate, scores the tracking error with either a least
squares or a log-barrier criterion, commits the first epoch of the
canonical-order-first minimizer, advances the dynamic states, and repeats.

Candidate evaluation exploits the product structure of the admissible set:
each load's distinct row sequences are rolled out once (precomputed
epoch-chunk operators of the ZOH models), and candidate demand curves are
assembled by indexed summation.  Evaluation runs over fixed-size candidate
chunks; chunks may be dispatched to a thread pool, and the reduction is by
(cost, canonical rank), so results are independent of the thread count.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dynamics import DiscreteDynamics, LoadBank, zoh_discretize
from .enumeration import (
    DEFAULT_SEMANTICS,
    FAR,
    DecisionGrid,
    LoadSwitchState,
    ScheduleMatrix,
    SwitchSemantics,
    _enumerate_load_rows,
    _load_options,
    epoch_minimums,
)

_CRITERIA = ("least_squares", "barrier")
_COST_SAMPLING = ("per_sample", "epoch")
_CHUNK = 4096  # candidates per evaluation chunk; fixed so results never depend on threading


@dataclass(frozen=True, eq=False)
class PowerProfile:
    """Uniformly sampled normalized power target."""

    samples: np.ndarray
    dt: float
    start_time: float = 0.0

    def __post_init__(self):
        arr = np.ascontiguousarray(self.samples, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("profile must be a non-empty 1-D sequence")
        if not np.isfinite(arr).all():
            raise ValueError("profile contains non-finite values")
        if not self.dt > 0.0:
            raise ValueError(f"sample time must be positive, got {self.dt}")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class TrackingConfig:
    """Criterion and grid driving one receding-horizon run.

    The barrier constraint map is the identity (the log penalty acts on the
    error itself), which is exactly what enforcing ``e > 0`` requires.
    """

    grid: DecisionGrid
    criterion: str = "barrier"
    cost_sampling: str = "per_sample"
    semantics: SwitchSemantics = DEFAULT_SEMANTICS

    def __post_init__(self):
        if self.criterion not in _CRITERIA:
            raise ValueError(f"criterion must be one of {_CRITERIA}, got {self.criterion!r}")
        if self.cost_sampling not in _COST_SAMPLING:
            raise ValueError(f"cost_sampling must be one of {_COST_SAMPLING}, got {self.cost_sampling!r}")


@dataclass(eq=False)
class ScheduleEvaluation:
    """One scored candidate: schedule, cost, error trace, per-load demand."""

    schedule: ScheduleMatrix
    cost: float
    error: np.ndarray         # tracking error at each window sample
    trajectories: np.ndarray  # (n_loads, window) per-load demand


@dataclass
class StepDiagnostics:
    candidates: int
    fallback: bool
    best_cost: float


@dataclass
class RecedingHorizonState:
    """Live controller state carried across decision epochs.

    ``dyn_states`` holds one padded (output, slope) vector per load for the
    currently active branch model; first-order branches simply leave the
    slope component at zero.
    """

    switch_states: list[LoadSwitchState]
    dyn_states: list[np.ndarray]
    sample_index: int = 0
    history: list[tuple[int, ...]] = field(default_factory=list)

    @staticmethod
    def initial(bank: LoadBank) -> "RecedingHorizonState":
        """Day-start state: every load off (for all prior time) and at rest."""
        return RecedingHorizonState(
            switch_states=[LoadSwitchState.initial_off() for _ in bank.loads],
            dyn_states=[np.array([ld.off_level, 0.0]) for ld in bank.loads],
        )


@dataclass(eq=False)
class DayRecord:
    """Full-day result of a receding-horizon run."""

    bank: LoadBank
    dt: float
    time_s: np.ndarray          # (K+1,)
    supply: np.ndarray          # (K+1,)
    demand: np.ndarray          # (n, K+1) per-load power
    commands: np.ndarray        # (n, K+1) command held at each sample
    error: np.ndarray           # (K+1,) supply minus total demand
    epoch_actions: np.ndarray   # (E, n)
    epoch_fallback: np.ndarray  # (E,) True where every candidate hit the barrier
    epoch_cost: np.ndarray      # (E,) cost of the committed candidate
    epoch_candidates: np.ndarray  # (E,) admissible-set size
    metrics: dict
    config_echo: dict


def tracking_error(p_window, trajectories) -> np.ndarray:
    """Elementwise supply-minus-total-demand error."""
    target = np.asarray(p_window, dtype=float)
    traj = np.atleast_2d(np.asarray(trajectories, dtype=float))
    if traj.shape[1] != target.shape[0]:
        raise ValueError(f"length mismatch: target has {target.shape[0]} samples, trajectories {traj.shape[1]}")
    return target - traj.sum(axis=0)


def cost(e, criterion: str) -> float:
    """Scalar tracking cost of an error trace.

    least_squares: sum of squared errors.  barrier: sum of squared errors
    plus -log(e) per sample; any non-positive error makes the cost +inf
    (the barrier enforces demand strictly below supply).
    """
    if criterion not in _CRITERIA:
        raise ValueError(f"criterion must be one of {_CRITERIA}, got {criterion!r}")
    err = np.asarray(e, dtype=float)
    if criterion == "least_squares":
        return float(np.sum(err * err))
    if np.any(err <= 0.0):
        return math.inf
    return float(np.sum(err * err - np.log(err)))


def _batch_costs(e: np.ndarray, criterion: str) -> np.ndarray:
    """Vectorized :func:`cost` over rows of an error matrix."""
    quad = np.einsum("ij,ij->i", e, e)
    if criterion == "least_squares":
        return quad
    bad = (e <= 0.0).any(axis=1)
    logs = np.zeros_like(e)
    np.log(e, out=logs, where=e > 0.0)
    out = quad - logs.sum(axis=1)
    out[bad] = np.inf
    return out


def _batch_violations(e: np.ndarray) -> np.ndarray:
    """Squared constraint violation used by the barrier fall-back."""
    v = np.where(e < 0.0, e, 0.0)
    return np.einsum("ij,ij->i", v, v)


class _BranchKernel:
    """Epoch-chunk response operators for one branch model of one load.

    Maps a padded 2-state at an epoch start to the within-epoch output
    samples and the end-of-epoch state under the held branch input.  Models
    of order 1 are zero-padded, which is exact (the extra component never
    leaves zero).
    """

    __slots__ = ("obs_t", "uinp", "apow_t", "ubinp", "u")

    def __init__(self, disc: DiscreteDynamics, u: float, nd: int):
        d = disc.state_dimension
        a2 = np.zeros((2, 2))
        a2[:d, :d] = disc.a
        b2 = np.zeros(2)
        b2[:d] = disc.b
        obs = np.empty((nd, 2))
        inp = np.empty(nd)
        apow = np.eye(2)
        binp = np.zeros(2)
        for j in range(nd):
            binp = a2 @ binp + b2     # sum_{m<j+1} A^m B
            apow = a2 @ apow          # A^{j+1}
            obs[j] = apow[0]
            inp[j] = binp[0]
        self.obs_t = obs.T.copy()
        self.uinp = u * inp
        self.apow_t = apow.T.copy()
        self.ubinp = u * binp
        self.u = u


class _LoadRuntime:
    """Rollout machinery for one load's admissible rows."""

    __slots__ = ("kern_on", "kern_off", "nd")

    def __init__(self, spec, dt: float, nd: int):
        self.kern_on = _BranchKernel(zoh_discretize(spec.on_dynamics, dt), spec.size, nd)
        self.kern_off = _BranchKernel(zoh_discretize(spec.off_dynamics, dt), spec.off_level, nd)
        self.nd = nd

    def rollout(self, bits: np.ndarray, init_on: bool, init_state: np.ndarray):
        """Simulate all rows; returns (trajectories (R, H*nd), states after epoch 0)."""
        rows, horizon = bits.shape
        nd = self.nd
        traj = np.empty((rows, horizon * nd))
        states = np.repeat(init_state[None, :], rows, axis=0)
        prev_on = np.full(rows, init_on)
        after_first = None
        for m in range(horizon):
            cur = bits[:, m].astype(bool)
            flip = cur != prev_on
            if flip.any():
                # output continuity: component 0 (the output) carries over,
                # the slope component restarts at zero
                states[flip, 1] = 0.0
            for kern, sel in ((self.kern_on, cur), (self.kern_off, ~cur)):
                if sel.any():
                    s = states[sel]
                    traj[sel, m * nd:(m + 1) * nd] = s @ kern.obs_t + kern.uinp
                    states[sel] = s @ kern.apow_t + kern.ubinp
            prev_on = cur
            if m == 0:
                after_first = states.copy()
        return traj, after_first


class _Engine:
    """Precomputed per-run machinery shared by every optimization step."""

    def __init__(self, bank: LoadBank, cfg: TrackingConfig, threads: int = 1):
        if threads < 1:
            raise ValueError(f"threads must be >= 1, got {threads}")
        if abs(cfg.grid.dt - bank.dt) > 1e-12:
            raise ValueError(f"grid sample time {cfg.grid.dt} != bank sample time {bank.dt}")
        self.bank = bank
        self.cfg = cfg
        self.nd = cfg.grid.samples_per_epoch
        self.mins = epoch_minimums(bank, cfg.grid)
        self.runtimes = [_LoadRuntime(ld, bank.dt, self.nd) for ld in bank.loads]
        day = bank.day_samples
        if day % self.nd != 0:
            raise ValueError(
                f"day length ({day} samples) is not a whole number of decision epochs ({self.nd} samples)"
            )
        self.day_epochs = day // self.nd
        self._pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _map(self, fn, items):
        if self._pool is None:
            return [fn(it) for it in items]
        return list(self._pool.map(fn, items))

    def _priced(self, e: np.ndarray) -> np.ndarray:
        if self.cfg.cost_sampling == "per_sample":
            return e
        return e[:, self.nd - 1::self.nd]  # decision-instant samples only

    def optimize_step(self, state: RecedingHorizonState, window: np.ndarray):
        """Evaluate the admissible set from ``state`` against ``window``.

        Returns (first-epoch action, ScheduleEvaluation, StepDiagnostics,
        commit payload).  The commit payload carries the winner's first-epoch
        demand samples and end-of-epoch dynamic states so the receding loop
        advances with exactly the predicted trajectory.
        """
        window = np.asarray(window, dtype=float)
        nd = self.nd
        if window.ndim != 1 or window.size == 0 or window.size % nd != 0:
            raise ValueError(f"window must cover a whole number of epochs of {nd} samples, got {window.size}")
        h_eff = window.size // nd
        epoch_index = state.sample_index // nd
        to_day_end = self.day_epochs - epoch_index
        sem = self.cfg.semantics
        n = self.bank.n_loads

        rows_per_load = []
        for st, (mo, mf) in zip(state.switch_states, self.mins):
            rows = _enumerate_load_rows(
                (st.on, st.dwell_epochs), mo, mf, h_eff, to_day_end, sem, pin_first_epoch=False
            )
            rows_per_load.append(np.array(rows, dtype=np.uint8))

        rolled = self._map(
            lambda i: self.runtimes[i].rollout(
                rows_per_load[i], state.switch_states[i].on, state.dyn_states[i]
            ),
            range(n),
        )
        trajs = [r[0] for r in rolled]
        after_first = [r[1] for r in rolled]

        counts = [r.shape[0] for r in rows_per_load]
        total = 1
        for c in counts:
            total *= c
        assert total >= 1, "admissible set cannot be empty: holding is always admissible"

        # candidate row-index tuples in itertools.product order, then sorted
        # into canonical order (lexicographic over the epoch-major flattening)
        grids = np.meshgrid(*[np.arange(c) for c in counts], indexing="ij")
        cand = np.stack([g.ravel() for g in grids], axis=1)  # (C, n)
        keys = []
        for m in range(h_eff):
            for i in range(n):
                keys.append(rows_per_load[i][cand[:, i], m])
        order = np.lexsort(keys[::-1])
        cand = cand[order]

        def window_errors(span):
            lo, hi = span
            tot = trajs[0][cand[lo:hi, 0]]  # fancy indexing copies, safe to reuse
            for i in range(1, n):
                tot += trajs[i][cand[lo:hi, i]]
            return np.subtract(window[None, :], tot, out=tot)

        def evaluate(span):
            return _batch_costs(self._priced(window_errors(span)), self.cfg.criterion)

        def violations(span):
            return _batch_violations(self._priced(window_errors(span)))

        spans = [(lo, min(lo + _CHUNK, total)) for lo in range(0, total, _CHUNK)]

        def reduce_first_min(chunks):
            best_val = math.inf
            best_at = 0
            offset = 0
            for values in chunks:
                pos = int(np.argmin(values))
                if values[pos] < best_val:
                    best_val = float(values[pos])
                    best_at = offset + pos
                offset += len(values)
            return best_val, best_at

        best_cost, best_pos = reduce_first_min(self._map(evaluate, spans))
        fallback = not math.isfinite(best_cost)
        if fallback:
            # every candidate hit the barrier: commit the least-violating one
            _, best_pos = reduce_first_min(self._map(violations, spans))
        chosen = best_pos

        idx = cand[chosen]
        chosen_rows = [rows_per_load[i][idx[i]] for i in range(n)]
        chosen_traj = np.stack([trajs[i][idx[i]] for i in range(n)])
        err = window - chosen_traj.sum(axis=0)
        evaluation = ScheduleEvaluation(
            schedule=ScheduleMatrix(np.stack(chosen_rows)),
            cost=cost(self._priced(err[None, :])[0], self.cfg.criterion),
            error=err,
            trajectories=chosen_traj,
        )
        action = tuple(int(r[0]) for r in chosen_rows)
        self._assert_admissible(state, action, to_day_end)
        diag = StepDiagnostics(candidates=total, fallback=fallback, best_cost=evaluation.cost)
        commit = (chosen_traj[:, :nd], [after_first[i][idx[i]] for i in range(n)])
        return action, evaluation, diag, commit

    def _assert_admissible(self, state: RecedingHorizonState, action, to_day_end: int):
        for st, bit, (mo, mf) in zip(state.switch_states, action, self.mins):
            options = _load_options(st.on, st.dwell_epochs, mo, mf, to_day_end, self.cfg.semantics)
            assert bit in options, f"committed action {action} violates one-step admissibility"


def optimize_step(
    state: RecedingHorizonState,
    forecast_window: PowerProfile,
    bank: LoadBank,
    cfg: TrackingConfig,
    threads: int = 1,
):
    """Single receding-horizon step; see :class:`_Engine.optimize_step`.

    Returns (first-epoch action vector, best ScheduleEvaluation,
    StepDiagnostics).
    """
    with _Engine(bank, cfg, threads) as eng:
        action, evaluation, diag, _ = eng.optimize_step(state, forecast_window.samples)
    return action, evaluation, diag


def run_receding(
    profile: PowerProfile,
    bank: LoadBank,
    cfg: TrackingConfig,
    threads: int = 1,
    progress=None,
) -> DayRecord:
    """Run the full-day receding-horizon loop and assemble the day record.

    ``profile`` must span the whole day (``day_samples + 1`` values).  Each
    decision epoch the optimizer sees the next ``H * N_d`` forecast samples
    (fewer near day end, shrinking in whole epochs), commits the first epoch
    of the winning schedule, and advances by simulation.  ``progress``, if
    given, is called as ``progress(seconds_done, total_seconds)`` once per
    simulated hour.
    """
    if abs(profile.dt - bank.dt) > 1e-12:
        raise ValueError(f"profile sample time {profile.dt} != bank sample time {bank.dt}")
    k_day = bank.day_samples
    if len(profile) < k_day + 1:
        raise ValueError(f"profile has {len(profile)} samples but the day needs {k_day + 1}")
    t0 = time.perf_counter()
    supply = profile.samples[:k_day + 1].copy()
    nd = cfg.grid.samples_per_epoch
    horizon = cfg.grid.horizon_epochs
    n = bank.n_loads

    with _Engine(bank, cfg, threads) as eng:
        epochs = eng.day_epochs
        state = RecedingHorizonState.initial(bank)
        demand = np.zeros((n, k_day + 1))
        commands = np.zeros((n, k_day + 1), dtype=np.int8)
        epoch_actions = np.zeros((epochs, n), dtype=np.int8)
        epoch_fallback = np.zeros(epochs, dtype=bool)
        epoch_cost = np.zeros(epochs)
        epoch_candidates = np.zeros(epochs, dtype=np.int64)

        for ld in bank.loads:
            demand[ld.index - 1, 0] = ld.off_level

        hour_samples = int(round(3600.0 / bank.dt)) if bank.dt <= 3600.0 else None
        for e_idx in range(epochs):
            k = e_idx * nd
            h_eff = min(horizon, epochs - e_idx)
            window = supply[k + 1:k + 1 + h_eff * nd]
            action, evaluation, diag, commit = eng.optimize_step(state, window)

            first_traj, states_after = commit
            commands[:, k:k + nd] = np.array(action, dtype=np.int8)[:, None]
            demand[:, k + 1:k + nd + 1] = first_traj
            epoch_actions[e_idx] = action
            epoch_fallback[e_idx] = diag.fallback
            epoch_cost[e_idx] = evaluation.cost if math.isfinite(evaluation.cost) else math.inf
            epoch_candidates[e_idx] = diag.candidates

            new_switch = []
            for st, bit in zip(state.switch_states, action):
                if bool(bit) == st.on:
                    new_switch.append(LoadSwitchState(st.on, min(st.dwell_epochs + 1, FAR)))
                else:
                    new_switch.append(LoadSwitchState(bool(bit), 1))
            state.switch_states = new_switch
            state.dyn_states = states_after
            state.sample_index = k + nd
            state.history.append(action)

            if progress is not None and hour_samples and (k + nd) % hour_samples == 0:
                progress((k + nd) * bank.dt, bank.day_seconds)

    commands[:, k_day] = commands[:, k_day - 1]
    error = supply - demand.sum(axis=0)
    runtime = time.perf_counter() - t0

    in_fallback = np.zeros(k_day + 1, dtype=bool)
    for e_idx in np.nonzero(epoch_fallback)[0]:
        in_fallback[e_idx * nd + 1:(e_idx + 1) * nd + 1] = True
    supply_energy = float(bank.dt * supply[1:].sum())
    load_energy = float(bank.dt * demand[:, 1:].sum())
    metrics = {
        "rmse": float(np.sqrt(np.mean(error * error))),
        "supply_energy": supply_energy,
        "load_energy": load_energy,
        "utilization": load_energy / supply_energy if supply_energy > 0.0 else 0.0,
        "negative_error_samples": int((error < 0.0).sum()),
        "negative_error_outside_fallback": int((error[~in_fallback] < 0.0).sum()),
        "fallback_epochs": int(epoch_fallback.sum()),
        "epochs": int(epochs),
        "runtime_seconds": runtime,
    }
    config_echo = {
        "criterion": cfg.criterion,
        "cost_sampling": cfg.cost_sampling,
        "truncate_final_run": cfg.semantics.truncate_final_run,
        "dwell_counting": cfg.semantics.dwell_counting,
        "dt_seconds": bank.dt,
        "decision_period_seconds": cfg.grid.epoch_seconds,
        "horizon_seconds": cfg.grid.horizon_seconds,
        "day_seconds": bank.day_seconds,
        "n_loads": n,
        "load_sizes": [ld.size for ld in bank.loads],
        "threads": threads,
    }
    return DayRecord(
        bank=bank,
        dt=bank.dt,
        time_s=np.arange(k_day + 1) * bank.dt,
        supply=supply,
        demand=demand,
        commands=commands,
        error=error,
        epoch_actions=epoch_actions,
        epoch_fallback=epoch_fallback,
        epoch_cost=epoch_cost,
        epoch_candidates=epoch_candidates,
        metrics=metrics,
        config_echo=config_echo,
    )
