"""Small-dimension quantum state types and linear algebra helpers.

Amplitudes are plain Python ``complex`` values and density/operator
matrices are ``numpy`` arrays of dtype ``complex128``.  Index 0 is the
branch in which every device and system label reads ``0`` and index 1
the branch in which they read ``1``; for bipartite 2x2 problems the two
branches embed as ``|00>`` and ``|11>`` in A (x) B.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_FLOOR = 1e-10

# Pauli matrices on the two-branch logical space.
TAU0 = np.eye(2, dtype=complex)
TAU1 = np.array([[0, 1], [1, 0]], dtype=complex)
TAU2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
TAU3 = np.array([[1, 0], [0, -1]], dtype=complex)


class DegenerateStateError(ValueError):
    pass


@dataclass(frozen=True)
class TwoStateWavefunction:
    """Schmidt coefficients ``(a0, a1)`` of ``a0|0>_A|0>_B + a1|1>_A|1>_B``."""

    a0: complex
    a1: complex = 0.0

    def __post_init__(self):
        a0, a1 = complex(self.a0), complex(self.a1)
        if not (np.isfinite(a0) and np.isfinite(a1)):
            raise ValueError("amplitudes must be finite")
        object.__setattr__(self, "a0", a0)
        object.__setattr__(self, "a1", a1)

    @classmethod
    def from_p0(cls, p0: float, phase: float = 0.0) -> "TwoStateWavefunction":
        """Real state with ``|a0|^2 = p0``; ``phase`` is the relative phase of a1."""
        if not 0.0 <= p0 <= 1.0:
            raise ValueError(f"p0 must lie in [0, 1], got {p0}")
        return cls(math.sqrt(p0), math.sqrt(1.0 - p0) * complex(math.cos(phase), math.sin(phase)))

    @property
    def p0(self) -> float:
        return abs(self.a0) ** 2

    @property
    def p1(self) -> float:
        return abs(self.a1) ** 2

    @property
    def norm_sq(self) -> float:
        return self.p0 + self.p1

    def as_array(self) -> np.ndarray:
        return np.array([self.a0, self.a1], dtype=complex)

    def bipartite_vector(self) -> np.ndarray:
        """The state as a 4-vector on A (x) B, basis order |00>,|01>,|10>,|11>."""
        return np.array([self.a0, 0, 0, self.a1], dtype=complex)


def normalize(psi: TwoStateWavefunction) -> TwoStateWavefunction:
    n2 = psi.norm_sq
    if not n2 > 0.0:
        raise DegenerateStateError("degenerate state")
    n = math.sqrt(n2)
    return TwoStateWavefunction(psi.a0 / n, psi.a1 / n)


def expectation_sigma(psi: TwoStateWavefunction) -> float:
    """<sigma_z> = |a0|^2 - |a1|^2 for a normalized state."""
    return psi.p0 - psi.p1


def pure_density(coeffs: Sequence[complex] | np.ndarray | TwoStateWavefunction) -> np.ndarray:
    """Projector ``|psi><psi|``; the coefficient vector is normalized first."""
    if isinstance(coeffs, TwoStateWavefunction):
        coeffs = coeffs.as_array()
    v = np.asarray(coeffs, dtype=complex).ravel()
    n = np.linalg.norm(v)
    if n == 0.0:
        raise DegenerateStateError("zero vector has no density matrix")
    v = v / n
    return np.outer(v, v.conj())


def partial_trace(rho: np.ndarray, dims: tuple[int, int], keep: str = "B") -> np.ndarray:
    """Reduced density matrix of a bipartite ``rho`` on ``dA x dB``.

    ``keep`` selects the subsystem that survives, ``"A"`` or ``"B"``.
    """
    dA, dB = dims
    rho = np.asarray(rho)
    if rho.shape[-2:] != (dA * dB, dA * dB):
        raise ValueError(f"matrix of shape {rho.shape} does not match dims {dims}")
    r = rho.reshape(rho.shape[:-2] + (dA, dB, dA, dB))
    if keep == "B":
        return np.einsum("...ajak->...jk", r)
    if keep == "A":
        return np.einsum("...ajbj->...ab", r)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ rho)))


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


def check_density_matrix(rho: np.ndarray, *, hermitian_tol: float = HERMITIAN_TOL,
                         trace_tol: float = TRACE_TOL, psd_floor: float = PSD_FLOOR) -> None:
    """Raise ``ValueError`` unless ``rho`` is Hermitian, unit trace and PSD."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise ValueError("density matrix has non-finite entries")
    if not is_hermitian(rho, hermitian_tol):
        raise ValueError("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"density matrix trace {tr.real:.3e} != 1")
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if lam[0] < -psd_floor:
        raise ValueError(f"density matrix has negative eigenvalue {lam[0]:.3e}")


def kron(*ops: np.ndarray) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def embed_logical(op2: np.ndarray) -> np.ndarray:
    """Embed a 2x2 logical-branch operator into A (x) B via |0>->|00>, |1>->|11>."""
    idx = [0, 3]
    out = np.zeros((4, 4), dtype=complex)
    out[np.ix_(idx, idx)] = op2
    return out


def random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_operator(dim: int, rng: np.random.Generator) -> np.ndarray:
    return rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
