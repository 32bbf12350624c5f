"""Benchmark non-autonomous ODE systems, coefficient schedules and noise.

Schedules are small value objects that evaluate vectorised over time. Systems
bundle their schedules and expose the right-hand side, the state dimension and
the ground-truth coefficient map keyed by ``(equation, term name)`` using the
same term names as :mod:`dynsindy.sindy`.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import DegenerateDimensionError, DivergenceError


# ---------------------------------------------------------------------------
# coefficient schedules
# ---------------------------------------------------------------------------

class Schedule:
    kind = "abstract"

    def __call__(self, t):
        raise NotImplementedError

    def negated(self) -> "Schedule":
        raise NotImplementedError

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            d[f.name] = [list(x) for x in v] if f.name == "terms" else (list(v) if isinstance(v, tuple) else v)
        return d


@dataclass(frozen=True)
class Constant(Schedule):
    value: float
    kind = "constant"

    def __call__(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.value)

    def negated(self):
        return Constant(-self.value)


@dataclass(frozen=True)
class Sigmoid(Schedule):
    """``offset + amplitude / (1 + exp(-slope * (t - center)))``."""

    offset: float
    amplitude: float
    center: float
    slope: float
    kind = "sigmoid"

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        arg = -self.slope * (t - self.center)
        # scipy's expit would also do; this keeps overflow quiet for large |arg|
        with np.errstate(over="ignore"):
            return self.offset + self.amplitude / (1.0 + np.exp(arg))

    def negated(self):
        return Sigmoid(-self.offset, -self.amplitude, self.center, self.slope)


@dataclass(frozen=True)
class Switch(Schedule):
    """Piecewise constant; ``levels[k]`` holds on ``[switch_times[k-1], switch_times[k])``."""

    levels: Tuple[float, ...]
    switch_times: Tuple[float, ...]
    kind = "switch"

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(float(v) for v in self.levels))
        object.__setattr__(self, "switch_times", tuple(float(v) for v in self.switch_times))
        if len(self.levels) != len(self.switch_times) + 1:
            raise ValueError("switch schedule needs exactly one more level than switch times")
        if any(b <= a for a, b in zip(self.switch_times, self.switch_times[1:])):
            raise ValueError("switch_times must be strictly increasing")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(np.asarray(self.switch_times), t, side="right")
        return np.asarray(self.levels)[idx]

    def negated(self):
        return Switch(tuple(-v for v in self.levels), self.switch_times)


@dataclass(frozen=True)
class Sinusoid(Schedule):
    """``offset + amplitude * sin(frequency * t + phase)``, frequency in rad/time."""

    offset: float
    amplitude: float
    frequency: float
    phase: float = 0.0
    kind = "sinusoid"

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.offset + self.amplitude * np.sin(self.frequency * t + self.phase)

    def negated(self):
        return Sinusoid(-self.offset, -self.amplitude, self.frequency, self.phase)


@dataclass(frozen=True)
class Fourier(Schedule):
    """Finite Fourier series; ``terms`` are ``(amplitude, frequency, phase)``."""

    offset: float
    terms: Tuple[Tuple[float, float, float], ...]
    kind = "fourier"

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(tuple(float(v) for v in term) for term in self.terms))
        if any(len(term) != 3 for term in self.terms):
            raise ValueError("fourier terms are (amplitude, frequency, phase) triples")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full_like(t, self.offset)
        for amp, freq, phase in self.terms:
            out = out + amp * np.sin(freq * t + phase)
        return out

    def negated(self):
        return Fourier(-self.offset, tuple((-a, f, p) for a, f, p in self.terms))


@dataclass(frozen=True)
class _HeldNoise(Schedule):
    """``base(t)`` plus a noise table held constant over each sample interval."""

    base: Schedule
    t0: float
    dt: float
    noise: np.ndarray
    kind = "held_noise"

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.floor((t - self.t0) / self.dt + 1e-9).astype(int), 0, self.noise.size - 1)
        return self.base(t) + self.noise[idx]


SCHEDULE_KINDS = {cls.kind: cls for cls in (Constant, Sigmoid, Switch, Sinusoid, Fourier)}


def schedule_from_dict(d) -> Schedule:
    if isinstance(d, (int, float)):
        return Constant(float(d))
    d = dict(d)
    kind = d.pop("kind")
    if kind not in SCHEDULE_KINDS:
        raise ValueError(f"unknown schedule kind {kind!r}")
    return SCHEDULE_KINDS[kind](**d)


def eval_schedule(schedule: Schedule, t):
    """Evaluate a schedule at a scalar time or an array of times."""
    out = schedule(t)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# systems
# ---------------------------------------------------------------------------

class System:
    kind = "abstract"
    dim = 0

    def rhs(self, t: float, x: np.ndarray) -> np.ndarray:
        """Vector field at time ``t`` for states ``x`` of shape ``[..., dim]``."""
        raise NotImplementedError

    def ground_truth(self) -> Dict[Tuple[int, str], Schedule]:
        raise NotImplementedError

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            d[f.name] = v.to_dict() if isinstance(v, Schedule) else v
        return d


@dataclass(frozen=True)
class HarmonicOscillator(System):
    """``x' = A(t) y``, ``y' = B(t) x``."""

    A: Schedule
    B: Schedule
    kind = "harmonic_oscillator"
    dim = 2

    def rhs(self, t, x):
        return np.stack([self.A(t) * x[..., 1], self.B(t) * x[..., 0]], axis=-1)

    def ground_truth(self):
        return {(0, "x1"): self.A, (1, "x0"): self.B}


@dataclass(frozen=True)
class Lorenz(System):
    sigma: Schedule
    rho: Schedule
    beta: Schedule
    kind = "lorenz"
    dim = 3

    def rhs(self, t, x):
        x0, x1, x2 = x[..., 0], x[..., 1], x[..., 2]
        return np.stack([
            self.sigma(t) * (x1 - x0),
            x0 * (self.rho(t) - x2) - x1,
            x0 * x1 - self.beta(t) * x2,
        ], axis=-1)

    def ground_truth(self):
        return {
            (0, "x0"): self.sigma.negated(),
            (0, "x1"): self.sigma,
            (1, "x0"): self.rho,
            (1, "x1"): Constant(-1.0),
            (1, "x0 x2"): Constant(-1.0),
            (2, "x0 x1"): Constant(1.0),
            (2, "x2"): self.beta.negated(),
        }


@dataclass(frozen=True)
class LotkaVolterra(System):
    """Prey ``x`` and predator ``y``: ``x' = αx − βxy``, ``y' = −γy + δxy``."""

    alpha: float = 1.0
    beta: float = 0.5
    gamma: float = 1.0
    delta: float = 0.2
    kind = "lotka_volterra"
    dim = 2

    def rhs(self, t, x):
        x0, x1 = x[..., 0], x[..., 1]
        return np.stack([
            self.alpha * x0 - self.beta * x0 * x1,
            -self.gamma * x1 + self.delta * x0 * x1,
        ], axis=-1)

    def ground_truth(self):
        return {
            (0, "x0"): Constant(self.alpha),
            (0, "x0 x1"): Constant(-self.beta),
            (1, "x1"): Constant(-self.gamma),
            (1, "x0 x1"): Constant(self.delta),
        }

    def first_integral(self, x):
        x0, x1 = x[..., 0], x[..., 1]
        return self.delta * x0 - self.gamma * np.log(x0) + self.beta * x1 - self.alpha * np.log(x1)


@dataclass(frozen=True)
class CubicControl(System):
    """``x' = y``, ``y' = a3 x³ + a2 x² + a1 x + ay y + u(t)``."""

    a3: float
    a2: float
    a1: float
    ay: float
    u: Schedule
    kind = "cubic_control"
    dim = 2

    def rhs(self, t, x):
        x0, x1 = x[..., 0], x[..., 1]
        f = self.a3 * x0**3 + self.a2 * x0**2 + self.a1 * x0 + self.ay * x1 + self.u(t)
        return np.stack([x1, f], axis=-1)

    def ground_truth(self):
        return {
            (0, "x1"): Constant(1.0),
            (1, "1"): self.u,
            (1, "x0"): Constant(self.a1),
            (1, "x1"): Constant(self.ay),
            (1, "x0^2"): Constant(self.a2),
            (1, "x0^3"): Constant(self.a3),
        }


SYSTEM_KINDS = {cls.kind: cls for cls in (HarmonicOscillator, Lorenz, LotkaVolterra, CubicControl)}


def system_from_dict(d) -> System:
    d = dict(d)
    kind = d.pop("kind")
    if kind not in SYSTEM_KINDS:
        raise ValueError(f"unknown system kind {kind!r}")
    cls = SYSTEM_KINDS[kind]
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name not in d:
            continue
        v = d.pop(f.name)
        kwargs[f.name] = schedule_from_dict(v) if f.type in ("Schedule",) else float(v)
    if d:
        raise ValueError(f"unexpected fields for {kind}: {sorted(d)}")
    return cls(**kwargs)


# ---------------------------------------------------------------------------
# datasets
# ---------------------------------------------------------------------------

@dataclass
class TrajectoryDataset:
    """Multi-trajectory state time series.

    ``states`` has shape ``[n_traj, T, d]``. ``derivatives`` (same shape) holds
    the exact vector field along the clean trajectory when the data was
    simulated; noise leaves it untouched and normalization rescales it.
    """

    times: np.ndarray
    states: np.ndarray
    dt: float
    noise_std: float = 0.0
    ground_truth: Optional[Dict[Tuple[int, str], Schedule]] = None
    scale: Optional[np.ndarray] = None
    derivatives: Optional[np.ndarray] = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim == 2:
            self.states = self.states[None]
        if self.states.ndim != 3 or self.states.shape[1] != self.times.shape[0]:
            raise ValueError("states must be [n_traj, T, d] with T matching times")
        if self.times.size > 1:
            tol = 1e-12 * max(1.0, abs(self.dt)) * max(1.0, float(np.max(np.abs(self.times))))
            if np.max(np.abs(np.diff(self.times) - self.dt)) > tol:
                raise ValueError("times must be uniformly spaced with step dt")

    @property
    def n_traj(self):
        return self.states.shape[0]

    @property
    def n_times(self):
        return self.states.shape[1]

    @property
    def dim(self):
        return self.states.shape[2]

    def replace(self, **changes) -> "TrajectoryDataset":
        return dataclasses.replace(self, **changes)


def _step_rk4(system, t, x, dt):
    k1 = system.rhs(t, x)
    k2 = system.rhs(t + 0.5 * dt, x + 0.5 * dt * k1)
    k3 = system.rhs(t + 0.5 * dt, x + 0.5 * dt * k2)
    k4 = system.rhs(t + dt, x + dt * k3)
    return x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _step_euler(system, t, x, dt):
    return x + dt * system.rhs(t, x)


STEPPERS = {"rk4": _step_rk4, "euler": _step_euler}


def integrate(system, x0, t0, dt, n_steps, method="rk4", substeps=1, bound=1e8):
    """Integrate from ``x0`` (shape ``[..., d]``) and return ``n_steps`` samples.

    Each sample interval is covered by ``substeps`` internal steps of length
    ``dt / substeps``; sample ``k`` sits at ``t0 + k * dt``.
    """
    stepper = STEPPERS[method]
    x = np.array(x0, dtype=float)
    out = np.empty((n_steps,) + x.shape)
    out[0] = x
    h = dt / substeps
    for k in range(1, n_steps):
        t = t0 + (k - 1) * dt
        for s in range(substeps):
            x = stepper(system, t + s * h, x, h)
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > bound:
            raise DivergenceError(f"state exceeded bound {bound:g} at t={t + dt:g}")
        out[k] = x
    return out


def simulate(system: System, x0, dt: float, n_steps: int, method: str = "rk4",
             n_traj: int = 1, x0_jitter_std: float = 0.1, seed: int = 0,
             t0: float = 0.0, bound: float = 1e8, coefficient_noise_std: float = 0.0) -> TrajectoryDataset:
    """Simulate ``n_traj`` trajectories sharing one coefficient realization.

    Trajectory 0 starts exactly at ``x0``; trajectory ``i > 0`` starts at
    ``x0`` plus Gaussian jitter drawn from the stream ``(seed, i)``.

    With ``coefficient_noise_std > 0`` every schedule gets an i.i.d. Gaussian
    perturbation per sample interval (stream ``(seed, 0, 1)``), held constant
    within the interval and shared by all trajectories. Ground truth stays the
    clean schedules.
    """
    x0 = np.asarray(x0, dtype=float)
    if dt <= 0:
        raise ValueError("dt must be positive")
    if n_steps < 2:
        raise ValueError("n_steps must be at least 2")
    if x0.shape != (system.dim,):
        raise ValueError(f"x0 must have length {system.dim}")
    starts = np.empty((n_traj, system.dim))
    starts[0] = x0
    for i in range(1, n_traj):
        rng = np.random.default_rng([seed, i])
        starts[i] = x0 + rng.normal(0.0, x0_jitter_std, size=system.dim)
    times = t0 + dt * np.arange(n_steps)
    clean_truth = system.ground_truth()
    if coefficient_noise_std < 0:
        raise ValueError("coefficient_noise_std must be non-negative")
    if coefficient_noise_std > 0:
        rng = np.random.default_rng([seed, 0, 1])
        system = dataclasses.replace(system, **{
            f.name: _HeldNoise(getattr(system, f.name), t0, dt, rng.normal(0.0, coefficient_noise_std, n_steps))
            for f in dataclasses.fields(system) if isinstance(getattr(system, f.name), Schedule)})
    traj = integrate(system, starts, t0, dt, n_steps, method=method, bound=bound)
    states = np.ascontiguousarray(np.swapaxes(traj, 0, 1))
    derivs = system.rhs(times[None, :], states)
    return TrajectoryDataset(times=times, states=states, dt=dt, noise_std=0.0,
                             ground_truth=clean_truth, derivatives=derivs)


def add_noise(dataset: TrajectoryDataset, std: float, seed: int = 0) -> TrajectoryDataset:
    """Additive i.i.d. Gaussian measurement noise on every state entry."""
    if std < 0:
        raise ValueError("noise std must be non-negative")
    if std == 0:
        return dataset.replace(states=dataset.states.copy(), noise_std=0.0)
    rng = np.random.default_rng(seed)
    noisy = dataset.states + rng.normal(0.0, std, size=dataset.states.shape)
    return dataset.replace(states=noisy, noise_std=float(std))


def normalize(dataset: TrajectoryDataset) -> TrajectoryDataset:
    """Divide each state dimension by its maximum absolute value.

    The factors are recorded in ``scale`` (composed with any earlier scale) and
    exact derivatives are divided by the same factors.
    """
    factors = np.max(np.abs(dataset.states), axis=(0, 1))
    bad = np.flatnonzero(factors == 0)
    if bad.size:
        raise DegenerateDimensionError(f"state dimension(s) {bad.tolist()} identically zero")
    derivs = None if dataset.derivatives is None else dataset.derivatives / factors
    prior = np.ones_like(factors) if dataset.scale is None else np.asarray(dataset.scale)
    return dataset.replace(states=dataset.states / factors, derivatives=derivs,
                           scale=prior * factors)
