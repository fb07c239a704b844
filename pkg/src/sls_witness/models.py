"""Two-branch state-reduction models and their single-step integrators.

Each model is a frozen dataclass; the step functions take and return
:class:`~sls_witness.core.TwoStateWavefunction` values.  Branch 0 carries
the +1 eigenvalue of sigma_z and branch 1 the -1 eigenvalue.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import _kernels as K
from .core import TwoStateWavefunction, expectation_sigma
from .noise import (OU, SBM, NoiseKind, NoiseState, RngStream, StaticOU, StaticSBM,
                    White, initial_noise, noise_step, wiener_increment)


class StepTooLargeError(ArithmeticError):
    pass


@dataclass(frozen=True)
class CSL:
    gamma: float

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")


@dataclass(frozen=True)
class SUV:
    J: float
    G: float
    noise: NoiseKind = field(default_factory=StaticSBM)

    def __post_init__(self):
        if not self.J > 0:
            raise ValueError(f"SUV requires J > 0, got {self.J}")
        _check_coloured(self.G, self.noise)


@dataclass(frozen=True)
class Linear:
    """SUV dynamics without the J<sigma> nonlinearity."""

    G: float
    noise: NoiseKind = field(default_factory=StaticSBM)

    J = 0.0

    def __post_init__(self):
        _check_coloured(self.G, self.noise)


@dataclass(frozen=True)
class ToyDeterministic:
    gamma: float

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")


ModelKind = Union[CSL, SUV, Linear, ToyDeterministic]


def _check_coloured(G, noise):
    if not G >= 0:
        raise ValueError(f"G must be non-negative, got {G}")
    if isinstance(noise, White):
        raise ValueError("SUV-type models need coloured or static noise; use CSL for white noise")
    if not isinstance(noise, (OU, SBM, StaticOU, StaticSBM)):
        raise TypeError(f"unknown noise kind {noise!r}")


def model_noise(model: ModelKind) -> NoiseKind:
    if isinstance(model, (SUV, Linear)):
        return model.noise
    return White()


def default_dt(model: ModelKind) -> float:
    """``min(tau/100, 1/(100 * max rate))``."""
    if isinstance(model, (CSL, ToyDeterministic)):
        rate = model.gamma
    else:
        rate = max(model.J, model.G)
    dt = 1.0 / (100.0 * rate) if rate > 0 else math.inf
    tau = getattr(model_noise(model), "tau", None)
    if tau is not None:
        dt = min(dt, tau / 100.0)
    if not math.isfinite(dt):
        raise ValueError(f"cannot choose a time step for {model}: all rates are zero")
    return dt


@dataclass(frozen=True)
class TrajectoryConfig:
    """Time discretisation and initial state of a run.

    ``record_grid`` times are snapped to the nearest step of the effective
    step ``horizon / n_steps``, where ``n_steps = ceil(horizon / dt)``.
    """

    dt: float
    horizon: float
    record_grid: Sequence[float]
    initial: TwoStateWavefunction

    def __post_init__(self):
        if not (self.dt > 0 and self.horizon > 0 and self.dt <= self.horizon):
            raise ValueError(f"need 0 < dt <= horizon, got dt={self.dt}, horizon={self.horizon}")
        grid = np.asarray(self.record_grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0:
            raise ValueError("record_grid must be a non-empty 1-d sequence")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("record_grid must be strictly increasing")
        if grid[0] < 0 or grid[-1] > self.horizon * (1 + 1e-12):
            raise ValueError("record_grid must lie inside [0, horizon]")
        if abs(self.initial.norm_sq - 1.0) > 1e-12:
            raise ValueError("initial state must be normalized")
        object.__setattr__(self, "record_grid", tuple(float(t) for t in grid))

    @classmethod
    def uniform(cls, initial: TwoStateWavefunction, horizon: float, dt: float,
                record_points: int = 200) -> "TrajectoryConfig":
        grid = np.linspace(0.0, horizon, record_points)
        return cls(dt=dt, horizon=horizon, record_grid=grid, initial=initial)

    @property
    def n_steps(self) -> int:
        return max(1, math.ceil(self.horizon / self.dt - 1e-9))

    @property
    def step(self) -> float:
        return self.horizon / self.n_steps

    def record_steps(self) -> np.ndarray:
        steps = np.rint(np.asarray(self.record_grid) / self.step).astype(np.int64)
        steps = np.clip(steps, 0, self.n_steps)
        if np.any(np.diff(steps) <= 0):
            raise ValueError("record_grid is finer than the time step")
        return steps

    def record_times(self) -> np.ndarray:
        return self.record_steps() * self.step


def _split(psi: TwoStateWavefunction):
    return abs(psi.a0), abs(psi.a1), cmath.phase(psi.a0), cmath.phase(psi.a1)


def _join(r0, r1, ph0, ph1) -> TwoStateWavefunction:
    return TwoStateWavefunction(cmath.rect(r0, ph0), cmath.rect(r1, ph1))


def csl_step(psi: TwoStateWavefunction, dt: float, dW: float, gamma: float) -> TwoStateWavefunction:
    """Euler-Maruyama step of the CSL generator followed by renormalisation."""
    r0, r1, ph0, ph1 = _split(psi)
    y0, y1, ok = K.csl_euler(r0, r1, gamma, dt, dW)
    if not ok:
        raise StepTooLargeError("step too large")
    return _join(y0, y1, ph0, ph1)


def suv_derivative(psi: TwoStateWavefunction, xi: float, J: float, G: float) -> tuple[complex, complex]:
    """``(d a0/dt, d a1/dt)`` of the SUV generator for noise value ``xi``."""
    s = expectation_sigma(psi) / psi.norm_sq
    a = J * s + G * xi
    return a * (1.0 - s) * psi.a0, -a * (1.0 + s) * psi.a1


def suv_step(psi: TwoStateWavefunction, xi: NoiseState, dt: float, rng: RngStream,
             J: float, G: float) -> tuple[TwoStateWavefunction, NoiseState]:
    """RK4 step of the state with xi frozen at its current value, then advance xi."""
    r0, r1, ph0, ph1 = _split(psi)
    y0, y1 = K.suv_rk4(r0, r1, xi.value, J, G, dt)
    return _join(y0, y1, ph0, ph1), noise_step(xi, dt, rng)


def toy_step(psi: TwoStateWavefunction, dt: float, gamma: float) -> TwoStateWavefunction:
    """RK4 step of d psi/dt = gamma (sigma_z - <sigma_z>) psi."""
    r0, r1, ph0, ph1 = _split(psi)
    y0, y1 = K.suv_rk4(r0, r1, 1.0, 0.0, gamma, dt)
    return _join(y0, y1, ph0, ph1)


def toy_analytic(s0: float, t: float | np.ndarray, gamma: float):
    """<sigma_z>(t) = tanh(2 gamma t + artanh s0) for the deterministic toy model."""
    t = np.asarray(t, dtype=float)
    if abs(s0) >= 1.0:
        out = np.full_like(t, float(s0))
    else:
        out = np.tanh(2.0 * gamma * t + np.arctanh(s0))
    return out if out.ndim else float(out)


def diffusion_terms(model: ModelKind, psi: TwoStateWavefunction) -> Sequence[tuple[float, float]]:
    """Branch eigenvalues of each Wiener-driven term; empty for random-ODE models."""
    if isinstance(model, CSL):
        s = expectation_sigma(psi)
        sg = math.sqrt(model.gamma)
        return [(sg * (1.0 - s), sg * (-1.0 - s))]
    return []


def simulate_trajectory(model: ModelKind, config: TrajectoryConfig, master_seed: int,
                        stream_id: int) -> tuple[np.ndarray, list[TwoStateWavefunction], np.ndarray]:
    """Reference single trajectory built from the public step functions.

    Returns ``(times, states, xi)`` at the record grid.  Consumes its stream
    exactly as the ensemble runner does.
    """
    rng = RngStream(master_seed, stream_id)
    xi = initial_noise(model_noise(model), rng)
    dt = config.step
    steps = config.record_steps()
    psi = config.initial
    states, xis = [], []
    k = 0
    for n in range(config.n_steps + 1):
        if n > 0:
            if isinstance(model, CSL):
                psi = csl_step(psi, dt, wiener_increment(rng, dt), model.gamma)
            elif isinstance(model, (SUV, Linear)):
                psi, xi = suv_step(psi, xi, dt, rng, model.J, model.G)
            else:
                psi = toy_step(psi, dt, model.gamma)
        while k < len(steps) and steps[k] == n:
            states.append(psi)
            xis.append(xi.value)
            k += 1
    return steps * dt, states, np.array(xis)
