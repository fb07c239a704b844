"""Monte Carlo ensembles of two-branch trajectories and witness statistics.

Trajectories are split into fixed blocks of :data:`BLOCK_SIZE` consecutive
stream ids.  Blocks run on a thread pool and their partial sums are merged
in block order, so results do not depend on the number of workers.
"""
from __future__ import annotations

import cmath
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels as K
from .core import TwoStateWavefunction, partial_trace
from .models import (CSL, SUV, Linear, ModelKind, ToyDeterministic, TrajectoryConfig,
                     default_dt, model_noise)
from .noise import OU, SBM, NoiseKind, StaticOU, StaticSBM, White, make_generator

BLOCK_SIZE = 512
TIME_CHUNK = 2048
WORKERS_ENV = "SLS_WITNESS_WORKERS"

CONSISTENT = "consistent_with_no_sls"
DETECTED = "sls_detected"


class TrajectoryError(RuntimeError):
    def __init__(self, stream_id: int, message: str = "trajectory failed"):
        super().__init__(f"{message} (stream id {stream_id})")
        self.stream_id = stream_id


class HorizonTooShortError(ValueError):
    pass


class CalibrationError(RuntimeError):
    def __init__(self, result: "CalibrationResult"):
        super().__init__(
            f"no Born-compatible ratio found: best G/J = {result.ratio:.6g} "
            f"with objective {result.objective:.4g} > {result.tolerance:.4g}")
        self.result = result


@dataclass(frozen=True)
class WitnessSeries:
    times: np.ndarray
    mean_p0: np.ndarray
    stderr: np.ndarray
    n_traj: int
    initial_p0: float
    # ensemble-mean |psi><psi| on A (x) B, shape (len(times), 4, 4); None unless recorded
    density: np.ndarray | None = field(default=None, repr=False)

    @property
    def witness(self) -> np.ndarray:
        return self.mean_p0 - self.initial_p0


@dataclass(frozen=True)
class OffDiagonalSeries:
    times: np.ndarray
    mean_cross: np.ndarray
    stderr: np.ndarray | None = None


@dataclass(frozen=True)
class SlsVerdict:
    max_abs_z: float
    t_max: float
    verdict: str
    threshold_z: float

    @property
    def sls_detected(self) -> bool:
        return self.verdict == DETECTED


def worker_count(workers: int | None = None) -> int:
    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        workers = int(env) if env else (os.cpu_count() or 1)
    if workers < 1:
        raise ValueError(f"worker count must be positive, got {workers}")
    return workers


def _model_codes(model: ModelKind):
    """``(model code, J, G, gamma, noise code, tau)`` for the compiled loop."""
    noise = model_noise(model)
    tau = getattr(noise, "tau", 1.0)
    if isinstance(model, CSL):
        return K.MODEL_CSL, 0.0, 0.0, float(model.gamma), K.NOISE_NONE, 1.0
    if isinstance(model, ToyDeterministic):
        return K.MODEL_TOY, 0.0, 0.0, float(model.gamma), K.NOISE_NONE, 1.0
    if isinstance(model, (SUV, Linear)):
        return K.MODEL_SUV, float(model.J), float(model.G), 0.0, noise.code, float(tau)
    raise TypeError(f"unknown model {model!r}")


def _initial_xi(noise: NoiseKind, gens) -> np.ndarray:
    if isinstance(noise, White):
        return np.zeros(len(gens))
    if isinstance(noise, (OU, StaticOU)):
        return np.array([g.standard_normal() for g in gens])
    if isinstance(noise, (SBM, StaticSBM)):
        return np.array([g.uniform(-1.0, 1.0) for g in gens])
    raise TypeError(f"unknown noise kind {noise!r}")


def _run_block(model: ModelKind, config: TrajectoryConfig, master_seed: int,
               first: int, count: int, record_steps: np.ndarray) -> np.ndarray:
    code, J, G, gamma, noise_code, tau = _model_codes(model)
    noise = model_noise(model)
    gens = [make_generator(master_seed, sid) for sid in range(first, first + count)]
    xi = _initial_xi(noise, gens)
    psi = config.initial
    r0_init, r1_init = abs(psi.a0), abs(psi.a1)
    r0 = np.full(count, r0_init)
    r1 = np.full(count, r1_init)
    sums = np.zeros((4, len(record_steps)))
    needs_normals = code == K.MODEL_CSL or noise_code in (K.NOISE_OU, K.NOISE_SBM)
    dt = config.step
    n_steps = config.n_steps
    k = 0
    n_first = 1
    while n_first <= n_steps:
        n_count = min(TIME_CHUNK, n_steps - n_first + 1)
        if needs_normals:
            normals = np.empty((n_count, count))
            for i, g in enumerate(gens):
                normals[:, i] = g.standard_normal(n_count)
        else:
            normals = np.empty((0, count))
        k, fail = K.advance_block(code, J, G, gamma, noise_code, tau, r0, r1, xi, normals,
                                  n_first, n_count, dt, record_steps, k,
                                  r0_init * r0_init, r0_init * r1_init,
                                  sums[0], sums[1], sums[2], sums[3])
        if fail >= 0:
            raise TrajectoryError(first + fail)
        n_first += n_count
    return sums


def _merge_blocks(partials, counts):
    """Combine per-block sums and squared deviations in block order (Chan et al.)."""
    total = np.zeros_like(partials[0])
    m2_p = np.zeros(partials[0].shape[1])
    m2_c = np.zeros_like(m2_p)
    n = 0
    for part, nb in zip(partials, counts):
        if n == 0:
            m2_p = part[1].copy()
            m2_c = part[3].copy()
        else:
            dp = part[0] / nb - total[0] / n
            dc = part[2] / nb - total[2] / n
            w = n * nb / (n + nb)
            m2_p += part[1] + dp * dp * w
            m2_c += part[3] + dc * dc * w
        total += part
        n += nb
    return total, m2_p, m2_c


def _resolved(m2: np.ndarray, n: int) -> np.ndarray:
    """Squared deviations below double-precision resolution of values in [0, 1] count as zero."""
    floor = n * (8.0 * np.finfo(float).eps) ** 2
    return np.where(m2 <= floor, 0.0, m2)


def run_ensemble(model: ModelKind, config: TrajectoryConfig, n_traj: int, master_seed: int,
                 *, workers: int | None = None, record_density: bool = False,
                 ) -> tuple[WitnessSeries, OffDiagonalSeries]:
    """Simulate ``n_traj`` trajectories with stream ids ``0..n_traj-1``.

    Records the ensemble mean of ``|a0|^2`` and of ``|a0 a1|`` on the record
    grid.  With ``record_density`` the ensemble-mean density matrix on
    A (x) B is attached to the returned witness series.
    """
    if n_traj < 100:
        raise ValueError(f"n_traj must be at least 100, got {n_traj}")
    record_steps = config.record_steps()
    blocks = [(s, min(BLOCK_SIZE, n_traj - s)) for s in range(0, n_traj, BLOCK_SIZE)]
    n_workers = min(worker_count(workers), len(blocks))

    def task(block):
        return _run_block(model, config, master_seed, block[0], block[1], record_steps)

    if n_workers == 1:
        partials = [task(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            partials = list(pool.map(task, blocks))
    total, m2_p, m2_c = _merge_blocks(partials, [b[1] for b in blocks])

    psi = config.initial
    p_ref = psi.p0
    c_ref = abs(psi.a0) * abs(psi.a1)
    mean_dp = total[0] / n_traj
    mean_dc = total[2] / n_traj
    var_p = _resolved(m2_p, n_traj) / (n_traj - 1)
    var_c = _resolved(m2_c, n_traj) / (n_traj - 1)
    times = record_steps * config.step
    mean_p0 = np.clip(p_ref + mean_dp, 0.0, 1.0)
    mean_cross = np.clip(c_ref + mean_dc, 0.0, 0.5)
    density = None
    if record_density:
        phase = cmath.exp(1j * (cmath.phase(psi.a0) - cmath.phase(psi.a1)))
        density = np.zeros((len(times), 4, 4), dtype=complex)
        density[:, 0, 0] = mean_p0
        density[:, 3, 3] = 1.0 - mean_p0
        density[:, 0, 3] = mean_cross * phase
        density[:, 3, 0] = mean_cross * np.conj(phase)
    witness = WitnessSeries(times=times, mean_p0=mean_p0, stderr=np.sqrt(var_p / n_traj),
                            n_traj=n_traj, initial_p0=p_ref, density=density)
    cross = OffDiagonalSeries(times=times, mean_cross=mean_cross,
                              stderr=np.sqrt(var_c / n_traj))
    return witness, cross


def compute_verdict(series: WitnessSeries, threshold_z: float = 5.0) -> SlsVerdict:
    """Largest witness z-score over the grid and the resulting verdict."""
    if len(series.times) == 0:
        raise ValueError("empty series")
    dev = series.mean_p0 - series.initial_p0
    err = np.asarray(series.stderr, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(err > 0, np.abs(dev) / err, np.where(dev == 0, 0.0, np.inf))
    i = int(np.argmax(z))
    max_z = float(z[i])
    verdict = DETECTED if max_z > threshold_z else CONSISTENT
    return SlsVerdict(max_abs_z=max_z, t_max=float(series.times[i]), verdict=verdict,
                      threshold_z=float(threshold_z))


def bob_reduced_density(density: WitnessSeries | np.ndarray) -> np.ndarray:
    """Bob's reduced density matrices ``Tr_A rho(t)`` from ensemble-mean 4x4 states."""
    if isinstance(density, WitnessSeries):
        if density.density is None:
            raise ValueError("density recording was disabled for this run")
        density = density.density
    return partial_trace(np.asarray(density), (2, 2), keep="B")


def timescales(series: WitnessSeries, cross: OffDiagonalSeries,
               method: str = "crossing") -> tuple[float, float]:
    """``(t_max, t_coll)``: time of largest witness deviation and off-diagonal decay time.

    ``method="crossing"`` takes the first grid time at which ``|mean_cross|``
    has fallen to ``1/e`` of its initial value; ``method="fit"`` fits an
    exponential to the part of the curve above ``e^-2`` of the initial value.
    """
    if len(series.times) == 0:
        raise ValueError("empty series")
    t_max = float(series.times[int(np.argmax(np.abs(series.mean_p0 - series.initial_p0)))])
    c = np.abs(np.asarray(cross.mean_cross, dtype=float))
    t = np.asarray(cross.times, dtype=float)
    below = np.nonzero(c <= math.exp(-1.0) * c[0])[0]
    if len(below) == 0:
        raise HorizonTooShortError("horizon too short")
    if method == "crossing":
        return t_max, float(t[below[0]])
    if method == "fit":
        keep = c > math.exp(-2.0) * c[0]
        keep[: below[0] + 1] = True
        keep &= c > 0
        slope = np.polyfit(t[keep] - t[0], np.log(c[keep] / c[0]), 1)[0]
        if not slope < 0:
            raise HorizonTooShortError("off-diagonal does not decay")
        return t_max, float(-1.0 / slope)
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class CalibrationResult:
    ratio: float
    objective: float
    deviations: tuple[float, ...]
    tolerance: float
    evaluations: tuple[tuple[float, float], ...]

    @property
    def success(self) -> bool:
        return self.objective <= self.tolerance


def born_deviations(noise: NoiseKind, ratio: float, initial_set: Sequence[TwoStateWavefunction],
                    horizon: float, n_traj: int, *, J: float = 1.0, master_seed: int = 0,
                    dt: float | None = None, workers: int | None = None) -> np.ndarray:
    """``mean_p0(horizon) - p0(0)`` for the SUV model at ``G/J = ratio`` for each initial state."""
    model = SUV(J=J, G=ratio * J, noise=noise)
    step = default_dt(model) if dt is None else dt
    out = []
    for psi in initial_set:
        config = TrajectoryConfig(dt=min(step, horizon), horizon=horizon,
                                  record_grid=[horizon], initial=psi)
        w, _ = run_ensemble(model, config, n_traj, master_seed, workers=workers)
        out.append(w.mean_p0[-1] - w.initial_p0)
    return np.array(out)


def calibrate_born(noise: NoiseKind, initial_set: Sequence[TwoStateWavefunction],
                   horizon: float, n_traj: int, *, J: float = 1.0, master_seed: int = 0,
                   tolerance: float = 0.01, log_range: tuple[float, float] = (-2.0, 2.0),
                   grid_points: int = 9, refine_steps: int = 12, dt: float | None = None,
                   workers: int | None = None, strict: bool = True) -> CalibrationResult:
    """Find the ratio G/J whose long-time ensemble obeys Born's rule for every initial state.

    The objective ``max |mean_p0(horizon) - p0(0)|`` is scanned on a grid in
    ``log10(G/J)`` and the best bracket is refined by golden-section search.
    Every evaluation reuses ``master_seed``.  With ``strict`` a
    :class:`CalibrationError` is raised when the optimum exceeds
    ``tolerance``.
    """
    if not isinstance(noise, (SBM, StaticSBM, OU, StaticOU)):
        raise TypeError(f"calibration needs SBM or OU noise, got {noise!r}")
    if len(initial_set) == 0:
        raise ValueError("initial_set is empty")
    cache: dict[float, tuple[float, np.ndarray]] = {}

    def objective(x: float) -> float:
        if x not in cache:
            dev = born_deviations(noise, 10.0 ** x, initial_set, horizon, n_traj, J=J,
                                  master_seed=master_seed, dt=dt, workers=workers)
            cache[x] = (float(np.max(np.abs(dev))), dev)
        return cache[x][0]

    grid = np.linspace(log_range[0], log_range[1], grid_points)
    values = [objective(float(x)) for x in grid]
    i = int(np.argmin(values))
    lo = float(grid[max(i - 1, 0)])
    hi = float(grid[min(i + 1, len(grid) - 1)])
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    for _ in range(refine_steps):
        if objective(c) <= objective(d):
            hi = d
        else:
            lo = c
        c = hi - invphi * (hi - lo)
        d = lo + invphi * (hi - lo)
    best = min(cache, key=lambda x: cache[x][0])
    result = CalibrationResult(
        ratio=10.0 ** best, objective=cache[best][0], deviations=tuple(cache[best][1]),
        tolerance=tolerance,
        evaluations=tuple(sorted((10.0 ** x, v[0]) for x, v in cache.items())))
    if strict and not result.success:
        raise CalibrationError(result)
    return result
