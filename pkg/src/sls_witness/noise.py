"""Generators for the stochastic drive xi_t.

Every trajectory owns an :class:`RngStream`, a Philox counter-based bit
generator keyed by ``(master_seed, stream_id)``.  The stream consumed by a
trajectory is, in order: one draw for the initial noise value (coloured
and static noise only), then one standard normal per time step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import _kernels as K

_UINT64 = (1 << 64) - 1


@dataclass(frozen=True)
class White:
    """Zero correlation time: Wiener increments drive the state directly."""

    code = K.NOISE_NONE


@dataclass(frozen=True)
class OU:
    """Ornstein-Uhlenbeck process with unit stationary variance."""

    tau: float
    code = K.NOISE_OU

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")


@dataclass(frozen=True)
class SBM:
    """Spherical Brownian motion on [-1, 1] with diffusion sqrt((1 - xi^2)/tau)."""

    tau: float
    code = K.NOISE_SBM

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")


@dataclass(frozen=True)
class StaticOU:
    """Infinite correlation time, value drawn from the OU stationary law."""

    code = K.NOISE_STATIC_OU


@dataclass(frozen=True)
class StaticSBM:
    """Infinite correlation time, value drawn from the SBM stationary law."""

    code = K.NOISE_STATIC_SBM


NoiseKind = Union[White, OU, SBM, StaticOU, StaticSBM]

STATIC_KINDS = (StaticOU, StaticSBM)


def is_static(kind: NoiseKind) -> bool:
    return isinstance(kind, STATIC_KINDS)


def is_bounded(kind: NoiseKind) -> bool:
    return isinstance(kind, (SBM, StaticSBM))


@dataclass(frozen=True)
class NoiseState:
    value: float
    kind: NoiseKind

    def __post_init__(self):
        v = float(self.value)
        if not math.isfinite(v):
            raise ValueError("noise value must be finite")
        if is_bounded(self.kind) and abs(v) > 1.0:
            raise ValueError(f"SBM noise value {v} outside [-1, 1]")
        object.__setattr__(self, "value", v)


@dataclass
class RngStream:
    """Per-trajectory random stream.

    The Philox key is ``(master_seed, stream_id)`` and the counter starts at
    zero, so a stream is a pure function of the pair.
    """

    master_seed: int
    stream_id: int
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self.master_seed = int(self.master_seed) & _UINT64
        self.stream_id = int(self.stream_id) & _UINT64
        self._gen = make_generator(self.master_seed, self.stream_id)

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def normal(self) -> float:
        return float(self._gen.standard_normal())

    def normals(self, n: int) -> np.ndarray:
        return self._gen.standard_normal(n)

    def uniform_sym(self) -> float:
        return float(self._gen.uniform(-1.0, 1.0))


def make_generator(master_seed: int, stream_id: int) -> np.random.Generator:
    key = np.array([int(master_seed) & _UINT64, int(stream_id) & _UINT64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def wiener_increment(rng: RngStream, dt: float) -> float:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    return math.sqrt(dt) * rng.normal()


def ou_step(xi: NoiseState, dt: float, rng: RngStream) -> NoiseState:
    """Exact OU transition over ``dt``."""
    if not isinstance(xi.kind, OU):
        raise TypeError(f"ou_step needs OU noise, got {xi.kind}")
    return NoiseState(K.ou_update(xi.value, dt, xi.kind.tau, rng.normal()), xi.kind)


def sbm_step(xi: NoiseState, dt: float, rng: RngStream) -> NoiseState:
    """Euler-Maruyama SBM step, clamped to [-1, 1]."""
    if not isinstance(xi.kind, SBM):
        raise TypeError(f"sbm_step needs SBM noise, got {xi.kind}")
    dw = math.sqrt(dt) * rng.normal()
    return NoiseState(K.sbm_update(xi.value, dt, xi.kind.tau, dw), xi.kind)


def sample_static(kind: NoiseKind, rng: RngStream) -> NoiseState:
    """Draw from the stationary law: standard normal (OU) or uniform on [-1, 1] (SBM)."""
    if isinstance(kind, (OU, StaticOU)):
        return NoiseState(rng.normal(), kind)
    if isinstance(kind, (SBM, StaticSBM)):
        return NoiseState(rng.uniform_sym(), kind)
    raise TypeError(f"no stationary law for {kind}")


def initial_noise(kind: NoiseKind, rng: RngStream) -> NoiseState:
    """Starting value of xi for a trajectory; coloured noise starts stationary."""
    if isinstance(kind, White):
        return NoiseState(0.0, kind)
    return sample_static(kind, rng)


def noise_step(xi: NoiseState, dt: float, rng: RngStream) -> NoiseState:
    kind = xi.kind
    if isinstance(kind, OU):
        return ou_step(xi, dt, rng)
    if isinstance(kind, SBM):
        return sbm_step(xi, dt, rng)
    if is_static(kind):
        return xi
    raise TypeError(f"white noise has no state to step ({kind})")


def noise_path(kind: NoiseKind, dt: float, n_steps: int, master_seed: int,
               stream_id: int) -> np.ndarray:
    """Noise values at steps ``0..n_steps`` for one stream."""
    rng = RngStream(master_seed, stream_id)
    xi = initial_noise(kind, rng)
    out = np.empty(n_steps + 1)
    out[0] = xi.value
    for n in range(n_steps):
        xi = noise_step(xi, dt, rng)
        out[n + 1] = xi.value
    return out
