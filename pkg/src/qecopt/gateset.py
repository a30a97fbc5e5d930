"""Trapped-ion elementary operations and the pulse/sequence data model.

Unitary kinds are generated by collective spin operators
``S_x = 1/2 sum_j sigma_x^(j)`` (and ``S_y``), their squares (Molmer-Sorensen
gates), and single-ion ``sigma_z^(j)/2``. Every generator is diagonal in a
product basis (x, y or z eigenbasis per qubit), which is exploited to apply
``exp(-i theta H)`` with per-qubit basis changes and one diagonal phase.

Qubits are 1-based; qubit 1 is the leftmost tensor factor. Time order is
left to right: the first pulse in a list is applied first.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .tensor import MAX_QUBITS, kron

_I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"I": _I2, "X": SIGMA_X, "Y": SIGMA_Y, "Z": SIGMA_Z}

# columns are the +1 / -1 eigenvectors of sigma_x, sigma_y, sigma_z
_EIGBASIS = {
    "x": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "y": np.array([[1, 1], [1j, -1j]], dtype=complex) / np.sqrt(2),
    "z": _I2,
}


class NotUnitaryKindError(ValueError):
    pass


class QubitIndexError(ValueError):
    pass


class Kind(enum.Enum):
    """Pulse kinds. Values double as sequence-file tokens."""

    X = "X"
    Y = "Y"
    XX = "X2"
    YY = "Y2"
    Z = "z"
    SUBSET_YY = "MSY2"
    MEASURE = "M"
    RESET = "R"

    @property
    def is_unitary(self) -> bool:
        return self not in (Kind.MEASURE, Kind.RESET)

    @property
    def is_ms(self) -> bool:
        return self in (Kind.XX, Kind.YY, Kind.SUBSET_YY)

    @property
    def is_global(self) -> bool:
        return self in (Kind.X, Kind.Y, Kind.XX, Kind.YY)


KIND_ORDER = {k: i for i, k in enumerate(Kind)}


@dataclass(frozen=True)
class Pulse:
    """One elementary operation.

    ``qubits`` holds the target for ``Z``/``MEASURE``/``RESET`` and the subset
    for ``SUBSET_YY``. For the collective kinds an empty tuple means "all
    qubits"; a non-empty tuple restricts the collective operation to that
    register (used when mid-sequence measurements are unrolled onto extra
    auxiliary qubits).
    """

    kind: Kind
    theta: float | None = None
    qubits: tuple[int, ...] = ()
    fixed: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.kind.is_unitary:
            if self.theta is None or not np.isfinite(self.theta):
                raise ValueError(f"{self.kind.value} needs a finite angle")
        elif self.theta is not None:
            raise ValueError(f"{self.kind.value} takes no angle")
        if self.kind in (Kind.Z, Kind.MEASURE, Kind.RESET) and len(self.qubits) != 1:
            raise ValueError(f"{self.kind.value} acts on exactly one qubit")
        if self.kind is Kind.SUBSET_YY:
            if not self.qubits or list(self.qubits) != sorted(set(self.qubits)):
                raise ValueError("subset must be a nonempty strictly increasing list")

    @property
    def target(self) -> int:
        return self.qubits[0]

    def with_theta(self, theta: float) -> Pulse:
        return replace(self, theta=float(theta))

    def check_qubits(self, n_qubits: int) -> None:
        for q in self.qubits:
            if not 1 <= q <= n_qubits:
                raise QubitIndexError(f"qubit {q} outside 1..{n_qubits} in {self.kind.value}")

    def __str__(self) -> str:
        from .seqfile import format_pulse

        return format_pulse(self)


def X(theta: float) -> Pulse:
    return Pulse(Kind.X, float(theta))


def Y(theta: float) -> Pulse:
    return Pulse(Kind.Y, float(theta))


def XX(theta: float) -> Pulse:
    return Pulse(Kind.XX, float(theta))


def YY(theta: float) -> Pulse:
    return Pulse(Kind.YY, float(theta))


def z(qubit: int, theta: float) -> Pulse:
    return Pulse(Kind.Z, float(theta), (qubit,))


def subset_yy(qubits: Iterable[int], theta: float) -> Pulse:
    return Pulse(Kind.SUBSET_YY, float(theta), tuple(qubits))


def M(qubit: int) -> Pulse:
    return Pulse(Kind.MEASURE, None, (qubit,))


def R(qubit: int) -> Pulse:
    return Pulse(Kind.RESET, None, (qubit,))


@dataclass
class PulseSequence:
    """Ordered pulses on ``n_qubits`` qubits, applied left to right."""

    n_qubits: int
    pulses: list[Pulse] = field(default_factory=list)

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"n_qubits must lie in 1..{MAX_QUBITS}")
        self.pulses = list(self.pulses)
        for p in self.pulses:
            p.check_qubits(self.n_qubits)

    def __len__(self) -> int:
        return len(self.pulses)

    def __iter__(self):
        return iter(self.pulses)

    def __getitem__(self, i):
        return self.pulses[i]

    @property
    def is_unitary_only(self) -> bool:
        return all(p.kind.is_unitary for p in self.pulses)

    @property
    def unitary_count(self) -> int:
        return sum(p.kind.is_unitary for p in self.pulses)

    @property
    def ms_count(self) -> int:
        return sum(p.kind.is_ms for p in self.pulses)

    def copy(self) -> PulseSequence:
        return PulseSequence(self.n_qubits, list(self.pulses))

    def unitary(self) -> np.ndarray:
        """Full matrix of a unitary-only sequence."""
        if not self.is_unitary_only:
            raise NotUnitaryKindError("sequence contains measurement or reset markers")
        u = np.eye(1 << self.n_qubits, dtype=complex)
        for p in self.pulses:
            u = apply_pulse(p, self.n_qubits, u)
        return u


# ---------------------------------------------------------------------------
# dense Hamiltonians (reference construction from Pauli sums)


def embed(op: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """Single-qubit ``op`` on ``qubit`` (1-based), identity elsewhere."""
    return kron(*[op if k == qubit else _I2 for k in range(1, n_qubits + 1)])


def pauli_string(label: str) -> np.ndarray:
    """Dense operator for a Pauli string such as ``"XZZXI"`` (qubit 1 first)."""
    return kron(*[PAULI[c] for c in label])


def _register(kind: Kind, qubits: Sequence[int], n_qubits: int) -> tuple[int, ...]:
    if qubits:
        return tuple(qubits)
    if kind is Kind.Z:
        raise ValueError("z needs a target qubit")
    return tuple(range(1, n_qubits + 1))


def hamiltonian(kind: Kind, n_qubits: int, qubits: Sequence[int] = ()) -> np.ndarray:
    """Dense Hermitian generator ``H`` with ``u(theta) = exp(-i theta H)``.

    ``Z`` gives ``sigma_z^(j)/2``; ``SUBSET_YY`` gives ``(1/2 sum_{j in subset} sigma_y^(j))^2``.
    """
    if not kind.is_unitary:
        raise NotUnitaryKindError(f"{kind.value} has no Hamiltonian")
    reg = _register(kind, qubits, n_qubits)
    for q in reg:
        if not 1 <= q <= n_qubits:
            raise QubitIndexError(f"qubit {q} outside 1..{n_qubits}")
    if kind is Kind.Z:
        return embed(SIGMA_Z, reg[0], n_qubits) / 2
    sigma = SIGMA_X if kind in (Kind.X, Kind.XX) else SIGMA_Y
    s = sum(embed(sigma, q, n_qubits) for q in reg) / 2
    return s @ s if kind.is_ms else s


# ---------------------------------------------------------------------------
# structured application


DENSE_BASIS_MAX_QUBITS = 7


@dataclass(frozen=True)
class _Diag:
    basis: np.ndarray  # 2x2 single-qubit eigenbasis applied on every register qubit
    register: tuple[int, ...]
    eigvals: np.ndarray  # diagonal of H in the rotated product basis
    levels: tuple[float, ...]  # distinct eigenvalues
    masks: tuple[np.ndarray, ...]  # boolean selector for each level
    dense: np.ndarray | None = None  # full basis change for small spaces


@lru_cache(maxsize=512)
def _diag(kind: Kind, register: tuple[int, ...], n_qubits: int) -> _Diag:
    idx = np.arange(1 << n_qubits)
    spins = [1 - 2 * ((idx >> (n_qubits - q)) & 1) for q in register]
    s = 0.5 * np.sum(spins, axis=0).astype(float)
    eig = s * s if kind.is_ms else s
    axis = {"X": "x", "X2": "x", "Y": "y", "Y2": "y", "MSY2": "y", "z": "z"}[kind.value]
    levels = tuple(sorted(set(np.round(eig, 12).tolist())))
    masks = tuple(np.isclose(eig, lv, atol=1e-9) for lv in levels)
    basis = _EIGBASIS[axis]
    dense = None
    if axis != "z" and n_qubits <= DENSE_BASIS_MAX_QUBITS:
        dense = kron(*[basis if q in register else _I2 for q in range(1, n_qubits + 1)])
    return _Diag(basis, register, eig, levels, masks, dense)


def diagonal_form(pulse: Pulse, n_qubits: int) -> _Diag:
    if not pulse.kind.is_unitary:
        raise NotUnitaryKindError(f"{pulse.kind.value} is not unitary")
    return _diag(pulse.kind, _register(pulse.kind, pulse.qubits, n_qubits), n_qubits)


def apply_local(block: np.ndarray, mat: np.ndarray, qubits: Sequence[int], n_qubits: int) -> np.ndarray:
    """Apply the same 2x2 ``mat`` to each listed qubit of a ``(2**n, m)`` block."""
    m = block.shape[1]
    t = block.reshape((2,) * n_qubits + (m,))
    for q in qubits:
        t = np.moveaxis(np.tensordot(mat, t, axes=([1], [q - 1])), 0, q - 1)
    return t.reshape(block.shape)


def to_eigenbasis(form: _Diag, block: np.ndarray, n_qubits: int) -> np.ndarray:
    if form.basis is _EIGBASIS["z"]:
        return block
    if form.dense is not None:
        return form.dense.conj().T @ block
    return apply_local(block, form.basis.conj().T, form.register, n_qubits)


def from_eigenbasis(form: _Diag, block: np.ndarray, n_qubits: int) -> np.ndarray:
    if form.basis is _EIGBASIS["z"]:
        return block
    if form.dense is not None:
        return form.dense @ block
    return apply_local(block, form.basis, form.register, n_qubits)


def apply_pulse(pulse: Pulse, n_qubits: int, block: np.ndarray, order: int = 0) -> np.ndarray:
    """Return ``(-iH)^order exp(-i theta H) @ block`` for a unitary pulse.

    ``block`` is a state vector or a ``(2**n, m)`` matrix of column states.
    """
    vec = block.ndim == 1
    b = block.reshape(-1, 1) if vec else block
    form = diagonal_form(pulse, n_qubits)
    factor = np.exp(-1j * pulse.theta * form.eigvals)
    if order:
        factor = factor * (-1j * form.eigvals) ** order
    out = from_eigenbasis(form, factor[:, None] * to_eigenbasis(form, b.astype(complex), n_qubits), n_qubits)
    return out.reshape(-1) if vec else out


def apply_pulse_adjoint(pulse: Pulse, n_qubits: int, block: np.ndarray) -> np.ndarray:
    """Return ``exp(+i theta H) @ block``."""
    return apply_pulse(pulse.with_theta(-pulse.theta), n_qubits, block)


def pulse_unitary(pulse: Pulse, n_qubits: int) -> np.ndarray:
    """Dense ``exp(-i theta H)`` for a unitary pulse."""
    if not pulse.kind.is_unitary:
        raise NotUnitaryKindError(f"{pulse.kind.value} is not unitary")
    return apply_pulse(pulse, n_qubits, np.eye(1 << n_qubits, dtype=complex))


def pulse_derivative(pulse: Pulse, n_qubits: int, order: int = 1) -> np.ndarray:
    """Dense ``d^order/dtheta^order exp(-i theta H) = (-iH)^order exp(-i theta H)``."""
    if not pulse.kind.is_unitary:
        raise NotUnitaryKindError(f"{pulse.kind.value} is not unitary")
    return apply_pulse(pulse, n_qubits, np.eye(1 << n_qubits, dtype=complex), order=order)


def same_action(p: Pulse, q: Pulse, n_qubits: int, up_to_phase: bool = False, tol: float = 1e-12) -> bool:
    """Compare two pulses by their unitaries rather than their raw angles."""
    if p.kind.is_unitary != q.kind.is_unitary:
        return False
    if not p.kind.is_unitary:
        return p.kind is q.kind and p.qubits == q.qubits
    a, b = pulse_unitary(p, n_qubits), pulse_unitary(q, n_qubits)
    if up_to_phase:
        ov = np.vdot(a, b)
        if abs(ov) < 1e-15:
            return False
        b = b * (abs(ov) / ov)
    return bool(np.max(np.abs(a - b)) <= tol)
