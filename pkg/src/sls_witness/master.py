"""Density-matrix dynamics: GKSL generators, locality audits and the toy-model checks.

All routines work on dense ``complex128`` arrays of small dimension.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import TAU0, TAU1, TAU3, is_hermitian, partial_trace

RateFn = Callable[[float], float]

LOCAL_TO_A = "local_to_A"
PRODUCT_NONLOCAL = "product_nonlocal"
ENTANGLED = "entangled"

SCHMIDT_RANK_TOL = 1e-10
POSITIVITY_FLOOR = 1e-8


class PositivityError(ArithmeticError):
    pass


@dataclass(frozen=True)
class JumpTerm:
    """Jump operator with a constant or time-dependent rate."""

    rate: float | RateFn
    op: np.ndarray

    def rate_at(self, t: float) -> float:
        return self.rate(t) if callable(self.rate) else self.rate


@dataclass(frozen=True)
class MemoryKernel:
    """Noise correlation ``D(t, s)`` returning a ``(channels, channels)`` real matrix."""

    func: Callable[[float, float], np.ndarray]
    # optional batched form: (t, s array of length n) -> (n, channels, channels)
    batch: Callable[[float, np.ndarray], np.ndarray] | None = None

    def __call__(self, t: float, s: float) -> np.ndarray:
        return np.atleast_2d(np.asarray(self.func(t, s), dtype=float))

    def on_grid(self, t: float, s: np.ndarray) -> np.ndarray:
        if self.batch is not None:
            return np.asarray(self.batch(t, s), dtype=float)
        return np.array([self(t, si) for si in s])

    @classmethod
    def exponential(cls, tau: float, channels: int = 1) -> "MemoryKernel":
        """``exp(-(t-s)/tau)/tau`` on every diagonal channel; unit mass for ``t >> tau``."""
        eye = np.eye(channels)
        return cls(lambda t, s: eye * math.exp(-(t - s) / tau) / tau,
                   lambda t, s: np.exp(-(t - s) / tau)[:, None, None] / tau * eye)

    @classmethod
    def zero(cls, channels: int = 1) -> "MemoryKernel":
        z = np.zeros((channels, channels))
        return cls(lambda t, s: z, lambda t, s: np.zeros((len(s), channels, channels)))


def _check_ops(H: np.ndarray | None, dim: int, jumps: Sequence[JumpTerm]):
    if H is not None:
        if H.shape != (dim, dim):
            raise ValueError(f"Hamiltonian shape {H.shape} does not match dimension {dim}")
        if not is_hermitian(H):
            raise ValueError("Hamiltonian is not Hermitian")
    for j in jumps:
        if np.shape(j.op) != (dim, dim):
            raise ValueError(f"jump operator shape {np.shape(j.op)} does not match dimension {dim}")


def gksl_generator(rho: np.ndarray, H: np.ndarray | None, jumps: Sequence[JumpTerm],
                   t: float = 0.0) -> np.ndarray:
    """``-i[H, rho] + sum_j Gamma_j(t) (L rho L^+ - {L^+ L, rho}/2)``."""
    rho = np.asarray(rho, dtype=complex)
    dim = rho.shape[0]
    _check_ops(H, dim, jumps)
    out = np.zeros_like(rho)
    if H is not None:
        out += -1j * (H @ rho - rho @ H)
    for j in jumps:
        L = np.asarray(j.op, dtype=complex)
        Ld = L.conj().T
        LdL = Ld @ L
        out += j.rate_at(t) * (L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL))
    return out


def _rk4(f, rho, t, dt):
    k1 = f(rho, t)
    k2 = f(rho + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = f(rho + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = f(rho + dt * k3, t + dt)
    return rho + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _integrate(f, rho0, horizon, dt, t0):
    n = max(1, math.ceil(horizon / dt - 1e-9))
    h = horizon / n
    rho = np.array(rho0, dtype=complex)
    out = np.empty((n + 1,) + rho.shape, dtype=complex)
    out[0] = rho
    for k in range(n):
        rho = _rk4(f, rho, t0 + k * h, h)
        lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
        if lam < -POSITIVITY_FLOOR:
            raise PositivityError(f"positivity lost at t={t0 + (k + 1) * h:.6g} "
                                  f"(eigenvalue {lam:.3e}), reduce dt")
        out[k + 1] = rho
    return t0 + h * np.arange(n + 1), out


def evolve_gksl(rho0: np.ndarray, H: np.ndarray | None, jumps: Sequence[JumpTerm],
                horizon: float, dt: float, t0: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """RK4 integration of the GKSL equation from ``t0`` to ``t0 + horizon``.

    Returns ``(times, rhos)``.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    _check_ops(H, rho0.shape[0], jumps)
    return _integrate(lambda r, t: gksl_generator(r, H, jumps, t), rho0, horizon, dt, t0)


def reduced_generator_A(psi: np.ndarray, LA: np.ndarray, LB: np.ndarray,
                        check: bool = True) -> np.ndarray:
    """``Tr_A[L rho L^+ - {L^+ L, rho}/2]`` for ``rho = |psi><psi|`` and ``L = LA (x) LB``.

    ``psi[i, j]`` is the amplitude of ``|i>_A |j>_B``.  The closed form
    contracts ``<i'|LA^+ LA|i>`` with ``psi[i, j] conj(psi[i', j'])`` and the
    B-space bracket ``LB|j><j'|LB^+ - {LB^+ LB, |j><j'|}/2``.  With ``check``
    the result is compared against the partial trace of the full generator.
    """
    psi = np.asarray(psi, dtype=complex)
    LA = np.asarray(LA, dtype=complex)
    LB = np.asarray(LB, dtype=complex)
    dA, dB = psi.shape
    if LA.shape != (dA, dA) or LB.shape != (dB, dB):
        raise ValueError(f"operator shapes {LA.shape}, {LB.shape} do not match psi {psi.shape}")
    MA = LA.conj().T @ LA
    # X[j, j'] = sum_{i, i'} <i'|MA|i> psi[i, j] conj(psi[i', j'])
    X = np.einsum("ki,ij,kl->jl", MA, psi, psi.conj())
    MB = LB.conj().T @ LB
    out = LB @ X @ LB.conj().T - 0.5 * (MB @ X + X @ MB)
    if check:
        ref = reduced_generator_bruteforce(psi, LA, LB)
        err = np.max(np.abs(out - ref))
        scale = max(1.0, np.max(np.abs(ref)))
        if err > 1e-12 * scale:
            raise AssertionError(f"closed form disagrees with brute force by {err:.3e}")
    return out


def reduced_generator_bruteforce(psi: np.ndarray, LA: np.ndarray, LB: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    dA, dB = psi.shape
    v = psi.reshape(-1)
    rho = np.outer(v, v.conj())
    L = np.kron(LA, LB)
    return partial_trace(gksl_generator(rho, None, [JumpTerm(1.0, L)]), (dA, dB), keep="B")


def operator_schmidt(L: np.ndarray, dims: tuple[int, int]):
    """Operator-Schmidt decomposition ``L = sum_k s_k A_k (x) B_k``.

    Returns ``(s, A, B)`` with ``A[k]`` of shape ``(dA, dA)`` and ``B[k]`` of
    shape ``(dB, dB)``, both Hilbert-Schmidt normalised.
    """
    dA, dB = dims
    L = np.asarray(L, dtype=complex)
    if L.shape != (dA * dB, dA * dB):
        raise ValueError(f"operator of shape {L.shape} does not match dims {dims}")
    R = L.reshape(dA, dB, dA, dB).transpose(0, 2, 1, 3).reshape(dA * dA, dB * dB)
    U, s, Vh = np.linalg.svd(R)
    A = U.T.reshape(-1, dA, dA)
    B = Vh.reshape(-1, dB, dB)
    return s, A, B


def locality_audit(L: np.ndarray, dims: tuple[int, int], tol: float = SCHMIDT_RANK_TOL) -> str:
    """Classify a jump operator across the A:B split.

    Returns ``"local_to_A"`` (``L = L_A (x) c I``), ``"product_nonlocal"``
    (operator-Schmidt rank 1 with a non-identity B factor) or
    ``"entangled"`` (rank above 1).
    """
    s, _, B = operator_schmidt(L, dims)
    if s[0] == 0.0:
        return LOCAL_TO_A
    rank = int(np.sum(s > tol * s[0]))
    if rank > 1:
        return ENTANGLED
    b = B[0]
    dB = b.shape[0]
    resid = b - np.trace(b) / dB * np.eye(dB)
    return LOCAL_TO_A if np.linalg.norm(resid) <= math.sqrt(tol) * np.linalg.norm(b) else PRODUCT_NONLOCAL


# --- toy model -----------------------------------------------------------

def toy_gksl_weights(t: float, gamma: float) -> tuple[float, float]:
    """``(gamma tanh(2 gamma t), gamma (tanh^2(2 gamma t) - 1) / tanh(2 gamma t))``."""
    if not t > 0:
        raise ValueError("weights singular at t=0")
    u = 2.0 * gamma * t
    # (tanh^2 u - 1) / tanh u = -2 / sinh(2u), which avoids cancellation at large u
    return gamma * math.tanh(u), -2.0 * gamma / math.sinh(2.0 * u)


def toy_jumps(gamma: float) -> list[JumpTerm]:
    """Jump terms ``tau3`` and ``tau1`` with the toy model's time-dependent rates."""
    return [JumpTerm(lambda t: toy_gksl_weights(t, gamma)[0], TAU3),
            JumpTerm(lambda t: toy_gksl_weights(t, gamma)[1], TAU1)]


def toy_density(t: float, gamma: float, s0: float = 0.0) -> np.ndarray:
    """Exact ``|psi(t)><psi(t)|`` on the two-branch space.

    For ``s0 = 0`` this is ``(tau0 + tau1/cosh(2 gamma t) + tau3 tanh(2 gamma t))/2``.
    """
    u = 2.0 * gamma * t + math.atanh(s0)
    return 0.5 * (TAU0 + TAU1 / math.cosh(u) + TAU3 * math.tanh(u))


def toy_density_derivative(t: float, gamma: float, s0: float = 0.0) -> np.ndarray:
    u = 2.0 * gamma * t + math.atanh(s0)
    sech = 1.0 / math.cosh(u)
    th = math.tanh(u)
    return gamma * (-TAU1 * sech * th + TAU3 * sech * sech)


def verify_toy_gksl(gamma: float, times: Sequence[float], s0: float = 0.0) -> float:
    """Largest elementwise gap between the toy GKSL generator and the exact d rho/dt."""
    jumps = toy_jumps(gamma)
    err = 0.0
    for t in times:
        lhs = gksl_generator(toy_density(t, gamma, s0), None, jumps, t)
        err = max(err, float(np.max(np.abs(lhs - toy_density_derivative(t, gamma, s0)))))
    return err


@dataclass(frozen=True)
class KrausReport:
    t: float
    dt: float
    gamma1: float
    gamma2: float
    identity_defect: float
    identity_defect_adjoint: float
    map_defect: float
    map_defect_adjoint: float
    k3_weight_real: bool


def toy_kraus_operators(t: float, dt: float, gamma: float) -> list[np.ndarray]:
    """``K1 = (1 - dt(G1+G2)/2) tau0, K2 = sqrt(dt G1) tau3, K3 = sqrt(dt G2) tau1``.

    The square roots are complex, so ``K3`` is imaginary when ``G2 < 0``.
    """
    g1, g2 = toy_gksl_weights(t, gamma)
    return [(1.0 - 0.5 * dt * (g1 + g2)) * TAU0,
            np.sqrt(complex(dt * g1)) * TAU3,
            np.sqrt(complex(dt * g2)) * TAU1]


def toy_kraus_check(t: float, dt: float, gamma: float, rho: np.ndarray | None = None) -> KrausReport:
    """Compare the small-step Kraus map with the toy GKSL generator at time ``t``.

    Two conjugation conventions are reported.  The *formal* one squares the
    scalar weights (``K_i^T``-style, i.e. ``w_i^2 P_i^+ P_i`` for ``K_i = w_i P_i``),
    which is the algebra under which the weights sum to the identity up to
    ``O(dt^2)``.  The *adjoint* one uses the true Hermitian conjugate; it
    differs at ``O(dt)`` whenever ``G2 < 0``.
    """
    if not (t > 0 and dt > 0):
        raise ValueError("need t > 0 and dt > 0")
    if rho is None:
        rho = toy_density(t, gamma)
    g1, g2 = toy_gksl_weights(t, gamma)
    weights = [1.0 - 0.5 * dt * (g1 + g2), np.sqrt(complex(dt * g1)), np.sqrt(complex(dt * g2))]
    paulis = [TAU0, TAU3, TAU1]
    eye = np.eye(2)
    target = rho + dt * gksl_generator(rho, None, toy_jumps(gamma), t)

    formal_id = sum(w * w * P.conj().T @ P for w, P in zip(weights, paulis))
    adjoint_id = sum(abs(w) ** 2 * P.conj().T @ P for w, P in zip(weights, paulis))
    formal_map = sum(w * w * P @ rho @ P.conj().T for w, P in zip(weights, paulis))
    adjoint_map = sum(abs(w) ** 2 * P @ rho @ P.conj().T for w, P in zip(weights, paulis))
    return KrausReport(
        t=t, dt=dt, gamma1=g1, gamma2=g2,
        identity_defect=float(np.max(np.abs(formal_id - eye))),
        identity_defect_adjoint=float(np.max(np.abs(adjoint_id - eye))),
        map_defect=float(np.max(np.abs(formal_map - target))),
        map_defect_adjoint=float(np.max(np.abs(adjoint_map - target))),
        k3_weight_real=bool(dt * g2 >= 0.0),
    )


# --- memory-kernel dynamics ------------------------------------------------

def double_commutator_generator(rho: np.ndarray, L_ops: Sequence[np.ndarray], rates: np.ndarray,
                                gamma: float) -> np.ndarray:
    """``-gamma sum_{mu,nu} R_{mu nu} [L_mu, [L_nu, rho]]``."""
    out = np.zeros_like(rho)
    inner = [L @ rho - rho @ L for L in L_ops]
    for mu, Lm in enumerate(L_ops):
        for nu, c in enumerate(inner):
            r = rates[mu, nu]
            if r != 0.0:
                out -= gamma * r * (Lm @ c - c @ Lm)
    return out


def integrated_kernel(kernel: MemoryKernel, t: float, ds: float) -> np.ndarray:
    """Trapezoid estimate of ``int_0^t D(t, s) ds`` on a grid of spacing about ``ds``."""
    if t <= 0.0:
        return np.zeros_like(kernel(0.0, 0.0))
    n = max(1, int(round(t / ds)))
    s = np.linspace(0.0, t, n + 1)
    return np.trapezoid(kernel.on_grid(t, s), s, axis=0)


def evolve_nonmarkovian(rho0: np.ndarray, L_ops: Sequence[np.ndarray], kernel: MemoryKernel,
                        gamma: float, horizon: float, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Integrate ``d rho/dt = -gamma sum int_0^t D(t,s) [L_mu,[L_nu, rho(t)]] ds``.

    The integrated kernel is rebuilt by the trapezoid rule at every RK4 stage
    time on a grid of spacing ``dt/2``.
    """
    L_ops = [np.asarray(L, dtype=complex) for L in L_ops]
    for L in L_ops:
        if not is_hermitian(L):
            raise ValueError("double-commutator form needs Hermitian operators")
    cache: dict[float, np.ndarray] = {}

    def rates(t):
        if t not in cache:
            cache[t] = integrated_kernel(kernel, t, 0.5 * dt)
        return cache[t]

    def f(rho, t):
        return double_commutator_generator(rho, L_ops, rates(t), gamma)

    return _integrate(f, np.asarray(rho0, dtype=complex), horizon, dt, 0.0)
