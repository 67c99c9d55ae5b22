"""Switched linear load models and their exact zero-order-hold discretization.

Each load draws power according to one of two low-order continuous-time
models: one active while the load is commanded on, one while it is commanded
off.  Both models are normalized to unit DC gain, so the steady on-state
demand equals the load size ``x_i`` and the steady off-state demand equals
the configured resting level (zero by default).

Models are restricted to one or two stable poles.  Second-order models use
the companion realization scaled so that the power demand is literally the
first state component and the second component is its time derivative; this
makes the on/off handoff (output continuity, zero output slope) a trivial
state projection.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

STABILITY_MARGIN = 1e-12  # a pole is accepted as stable when Re(p) <= -margin
DC_GAIN_TOL = 1e-9


def _sinch(x: float) -> float:
    """sinh(x)/x, series-expanded near zero."""
    if abs(x) < 1e-6:
        x2 = x * x
        return 1.0 + x2 / 6.0 + x2 * x2 / 120.0
    return math.sinh(x) / x


def _sinc(x: float) -> float:
    """sin(x)/x, series-expanded near zero."""
    if abs(x) < 1e-6:
        x2 = x * x
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0
    return math.sin(x) / x


@dataclass(frozen=True)
class ContinuousDynamics:
    """Strictly proper transfer function gain / prod(s - p) with unit DC gain.

    Use :func:`make_dynamics` to construct; it derives the numerator so that
    the response to a held unit input settles at exactly 1.
    """

    poles: tuple[complex, ...]
    gain: float

    @property
    def order(self) -> int:
        return len(self.poles)

    def evaluate(self, s: complex) -> complex:
        den = 1.0 + 0.0j
        for p in self.poles:
            den *= s - p
        return self.gain / den

    def dc_gain(self) -> float:
        return self.evaluate(0.0).real


def make_dynamics(poles) -> ContinuousDynamics:
    """Build unit-DC-gain dynamics from 1 or 2 stable poles.

    A non-real pole must be accompanied by its exact conjugate.  The
    numerator is the product of the negated poles (real by construction),
    which forces a DC gain of exactly 1.
    """
    ps = tuple(complex(p) for p in poles)
    if not 1 <= len(ps) <= 2:
        raise ValueError(f"expected 1 or 2 poles, got {len(ps)}")
    for p in ps:
        if p.real > -STABILITY_MARGIN:
            raise ValueError(f"unstable pole {p}: real part must be <= -{STABILITY_MARGIN}")
    if len(ps) == 1:
        if ps[0].imag != 0.0:
            raise ValueError(f"lone non-real pole {ps[0]} has no conjugate partner")
        gain = -ps[0].real
    else:
        p1, p2 = ps
        if (p1.imag != 0.0 or p2.imag != 0.0) and p2 != p1.conjugate():
            raise ValueError(f"poles {p1} and {p2} are not an exact conjugate pair")
        gain = (p1 * p2).real
    dyn = ContinuousDynamics(poles=ps, gain=gain)
    assert abs(dyn.dc_gain() - 1.0) <= 1e-12
    return dyn


@dataclass(frozen=True, eq=False)
class DiscreteDynamics:
    """Exact ZOH equivalent of a :class:`ContinuousDynamics` at step ``dt``.

    State recurrence x[k+1] = a @ x[k] + b * u[k]; the output is the first
    state component (no feedthrough).  For held inputs the sampled output
    matches the continuous solution at the sample instants to floating point.
    """

    a: np.ndarray
    b: np.ndarray
    dt: float

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if self.spectral_radius() >= 1.0:
            raise ValueError(f"discretized model is not stable (spectral radius {self.spectral_radius():.6g})")
        if abs(self.dc_gain() - 1.0) > DC_GAIN_TOL:
            raise ValueError(f"discretized model DC gain {self.dc_gain():.12g} != 1")

    @property
    def state_dimension(self) -> int:
        return self.a.shape[0]

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.a))))

    def dc_gain(self) -> float:
        d = self.state_dimension
        x_ss = np.linalg.solve(np.eye(d) - self.a, self.b)
        return float(x_ss[0])

    def hold_state(self, power: float) -> np.ndarray:
        """State whose output equals ``power`` with zero output slope."""
        x = np.zeros(self.state_dimension)
        x[0] = power
        return x

    def step(self, state: np.ndarray, u: float) -> np.ndarray:
        return self.a @ state + self.b * u


def zoh_discretize(dyn: ContinuousDynamics, dt: float) -> DiscreteDynamics:
    """Exact ZOH discretization of a 1- or 2-pole unit-gain model.

    First order uses the scalar exponential directly.  Second order evaluates
    the 2x2 matrix exponential in closed form from the pole pair (hyperbolic
    form for real pairs, trigonometric for conjugate pairs; both degenerate
    smoothly to the repeated-pole case), so no general-purpose expm is
    involved and the result is exact to floating point.
    """
    if not dt > 0.0:
        raise ValueError(f"sample time must be positive, got {dt}")
    if dyn.order == 1:
        p = dyn.poles[0].real
        a = math.exp(p * dt)
        b = -math.expm1(p * dt)  # == 1 - a, computed without cancellation
        return DiscreteDynamics(a=np.array([[a]]), b=np.array([b]), dt=dt)

    p1, p2 = dyn.poles
    a0 = (p1 * p2).real            # denominator s^2 + a1 s + a0
    a1 = -(p1 + p2).real
    A = np.array([[0.0, 1.0], [-a0, -a1]])
    sigma = 0.5 * (p1 + p2).real
    if p1.imag != 0.0:
        omega = abs(p1.imag)
        c = math.cos(omega * dt)
        s_over = dt * _sinc(omega * dt)  # sin(omega dt)/omega
    else:
        delta = 0.5 * abs((p1 - p2).real)
        c = math.cosh(delta * dt)
        s_over = dt * _sinch(delta * dt)  # sinh(delta dt)/delta
    E = math.exp(sigma * dt) * (c * np.eye(2) + s_over * (A - sigma * np.eye(2)))
    # With B = [0, a0] and unit DC gain, A^{-1} B = [-1, 0] exactly, so the
    # held-input integral collapses to the first column of (I - E).
    Bd = np.array([1.0 - E[0, 0], -E[1, 0]])
    return DiscreteDynamics(a=E, b=Bd, dt=dt)


@dataclass(frozen=True)
class LoadSpec:
    """One schedulable load: size, on/off dynamics, minimum dwell times.

    ``size`` is the steady on-state demand as a fraction of the normalized
    peak supply.  ``min_on_samples``/``min_off_samples`` are the minimum
    dwell times expressed in simulation samples.  ``off_level`` is the
    resting demand the off model decays to (zero for every default load).
    """

    index: int
    size: float
    on_dynamics: ContinuousDynamics
    off_dynamics: ContinuousDynamics
    min_on_samples: int
    min_off_samples: int
    off_level: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.size <= 1.0:
            raise ValueError(f"load {self.index}: size must be in (0, 1], got {self.size}")
        if self.min_on_samples < 1 or self.min_off_samples < 1:
            raise ValueError(f"load {self.index}: minimum dwell counts must be >= 1 sample")
        if self.off_level < 0.0:
            raise ValueError(f"load {self.index}: off_level must be >= 0")


@dataclass(frozen=True)
class LoadBank:
    """Ordered collection of loads sharing one sample grid and day length."""

    loads: tuple[LoadSpec, ...]
    dt: float
    day_seconds: float

    def __post_init__(self):
        object.__setattr__(self, "loads", tuple(self.loads))
        if not self.loads:
            raise ValueError("load bank is empty")
        if not self.dt > 0.0:
            raise ValueError(f"sample time must be positive, got {self.dt}")
        indices = [ld.index for ld in self.loads]
        if indices != list(range(1, len(self.loads) + 1)):
            raise ValueError(f"load indices must be contiguous from 1, got {indices}")
        ratio = self.day_seconds / self.dt
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError(f"day length {self.day_seconds} is not a positive multiple of dt {self.dt}")
        k = int(round(ratio))
        for ld in self.loads:
            if ld.min_on_samples > k or ld.min_off_samples > k:
                raise ValueError(f"load {ld.index}: minimum dwell exceeds the day length")

    @property
    def n_loads(self) -> int:
        return len(self.loads)

    @property
    def day_samples(self) -> int:
        return int(round(self.day_seconds / self.dt))


def simulate_load(load: LoadSpec, dt: float, w, initial_power: float = 0.0) -> np.ndarray:
    """Sample-level power trajectory of one load under a binary command.

    ``w`` holds one command per simulation step; the returned array has
    ``len(w) + 1`` entries starting at ``initial_power``.  While ``w`` is 1
    the on model is driven with input ``load.size``; while 0 the off model is
    driven with ``load.off_level``.  At every command transition the newly
    active model is re-initialized so its output equals the current power
    with zero output slope, so the demand trajectory is continuous across
    switches.
    """
    w = np.asarray(w)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("switching sequence must be a non-empty 1-D array")
    if not np.isin(w, (0, 1)).all():
        bad = w[~np.isin(w, (0, 1))][0]
        raise ValueError(f"switching sequence must be binary, found {bad!r}")
    if initial_power < 0.0:
        raise ValueError(f"initial power must be >= 0, got {initial_power}")

    disc = {True: zoh_discretize(load.on_dynamics, dt), False: zoh_discretize(load.off_dynamics, dt)}
    drive = {True: load.size, False: load.off_level}

    p = np.empty(w.size + 1)
    p[0] = initial_power
    active = bool(w[0])
    state = disc[active].hold_state(initial_power)
    for k, bit in enumerate(w):
        cmd = bool(bit)
        if cmd != active:
            active = cmd
            state = disc[active].hold_state(p[k])
        state = disc[active].step(state, drive[active])
        p[k + 1] = state[0]
    return p
