"""Dense complex linear algebra over multi-qubit spaces.

States and operators are plain ``numpy`` arrays of dtype ``complex128``.
A state on ``N`` qubits has length ``2**N``; an operator is ``2**N x 2**N``.
Qubit 1 is the leftmost tensor factor (most significant bit of the index).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

MAX_QUBITS = 12


@dataclass
class Tolerances:
    """Numerical thresholds shared across the package."""

    hermitian: float = 1e-12
    unitary: float = 1e-10
    norm: float = 1e-12
    branch_drop: float = 1e-14
    determinism: float = 1e-9
    purity: float = 1e-9


TOL = Tolerances()


class NonHermitianError(ValueError):
    pass


class DimensionMismatchError(ValueError):
    pass


class NotNormalizedError(ValueError):
    pass


def n_qubits_of(x: np.ndarray) -> int:
    """Number of qubits for a state vector or square operator."""
    dim = x.shape[0]
    if x.ndim == 2 and x.shape[1] != dim:
        raise DimensionMismatchError(f"operator is not square: {x.shape}")
    n = dim.bit_length() - 1
    if dim != 1 << n or n < 1:
        raise DimensionMismatchError(f"dimension {dim} is not a power of two >= 2")
    if n > MAX_QUBITS:
        raise DimensionMismatchError(f"{n} qubits exceeds the cap of {MAX_QUBITS}")
    return n


def kron(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of any number of operators or vectors, left to right."""
    return reduce(np.kron, ops)


def is_hermitian(h: np.ndarray, tol: float | None = None) -> bool:
    tol = TOL.hermitian if tol is None else tol
    return bool(np.max(np.abs(h - h.conj().T), initial=0.0) <= tol)


def is_unitary(u: np.ndarray, tol: float | None = None) -> bool:
    tol = TOL.unitary if tol is None else tol
    eye = np.eye(u.shape[0])
    return bool(np.max(np.abs(u.conj().T @ u - eye)) < tol)


class HermitianExp:
    """Cached eigendecomposition of a Hermitian ``h`` for repeated ``exp(-i theta h)``.

    One O(d^3) factorization, then each angle costs a diagonal phase plus two
    basis changes.
    """

    def __init__(self, h: np.ndarray, tol: float | None = None):
        h = np.asarray(h, dtype=complex)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise DimensionMismatchError(f"expected a square matrix, got {h.shape}")
        tol = TOL.hermitian if tol is None else tol
        dev = np.max(np.abs(h - h.conj().T), initial=0.0)
        if dev > tol:
            raise NonHermitianError(f"||h - h^dagger||_max = {dev:.3e} > {tol:.1e}")
        self.eigvals, self.eigvecs = np.linalg.eigh((h + h.conj().T) / 2)

    def __call__(self, theta: float) -> np.ndarray:
        v = self.eigvecs
        return (v * np.exp(-1j * theta * self.eigvals)) @ v.conj().T

    def apply(self, theta: float, block: np.ndarray) -> np.ndarray:
        v = self.eigvecs
        phases = np.exp(-1j * theta * self.eigvals)
        coeffs = v.conj().T @ block
        return v @ (phases.reshape((-1,) + (1,) * (block.ndim - 1)) * coeffs)


def expm_hermitian(h: np.ndarray, theta: float) -> np.ndarray:
    """Return ``exp(-i * theta * h)`` for Hermitian ``h``.

    Raises
    ------
    NonHermitianError
        If ``h`` deviates from its adjoint by more than the hermiticity tolerance.
    """
    return HermitianExp(h)(theta)


def inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Hilbert-Schmidt product ``tr(a^dagger b)`` for operators, ``<a|b>`` for vectors."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shapes differ: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def fidelity_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> float:
    """``|<a|b>|^2`` for unit vectors; insensitive to a global phase on either side."""
    for name, v in (("a", a), ("b", b)):
        if abs(np.linalg.norm(v) - 1.0) > tol:
            raise NotNormalizedError(f"{name} has norm {np.linalg.norm(v):.12f}")
    return float(min(1.0, abs(inner(a, b)) ** 2))


def basis_state(bits: str | int, n_qubits: int | None = None) -> np.ndarray:
    """Computational basis vector from a bit string (qubit 1 first) or an index."""
    if isinstance(bits, str):
        n_qubits = len(bits)
        index = int(bits, 2)
    else:
        if n_qubits is None:
            raise ValueError("n_qubits is required for an integer index")
        index = bits
    v = np.zeros(1 << n_qubits, dtype=complex)
    v[index] = 1.0
    return v
