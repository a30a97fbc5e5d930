"""QEC codes and the compilation of target contracts into objectives.

Every objective is expressed through *brackets* ``B = sum_e c_e <f_e|U|i_e>``
built from a pool of output vectors ``F`` and input vectors ``I``. The
performance value is

    sum_t w_t Re(conj(B_p(t)) B_q(t))  +  sum_s v_s Re(B_s)

which covers every contract here: syndrome maps, coherent correction,
logical gates with error re-mapping inside a hierarchy level, state
preparation and fixed unitaries (real or absolute-square overlap).
Auxiliary qubits always follow the code qubits in the tensor order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from itertools import product
from typing import Mapping, Sequence

import numpy as np

from .gateset import PAULI, pauli_string
from .tensor import DimensionMismatchError, basis_state, is_unitary, kron


class UnknownCodeError(KeyError):
    pass


class NonInjectiveOutcomeMapError(ValueError):
    pass


class AuxTooSmallError(ValueError):
    pass


class NonUnitaryGateError(ValueError):
    pass


@dataclass(frozen=True)
class CodeError:
    """Elementary error ``E`` as a Pauli string on the code qubits."""

    level: int
    label: str
    pauli: str

    def operator(self) -> np.ndarray:
        return pauli_string(self.pauli)


@dataclass
class CodeSpec:
    name: str
    n_code_qubits: int
    codewords: tuple[np.ndarray, np.ndarray]
    errors: list[CodeError]
    stabilizers: list[str] = field(default_factory=list)
    n_aux_qubits: int = 1

    def aux_init(self, n_aux: int | None = None) -> np.ndarray:
        """Auxiliary start state ``|1...1>`` (ion ground state)."""
        n = self.n_aux_qubits if n_aux is None else n_aux
        return basis_state("1" * n)

    def error(self, label: str) -> CodeError:
        for e in self.errors:
            if e.label == label:
                return e
        raise KeyError(label)

    def levels(self) -> dict[int, list[CodeError]]:
        out: dict[int, list[CodeError]] = {}
        for e in self.errors:
            out.setdefault(e.level, []).append(e)
        return out

    def logical(self, amp0: complex, amp1: complex) -> np.ndarray:
        return amp0 * self.codewords[0] + amp1 * self.codewords[1]


def _single_qubit_errors(n: int, letters: str) -> list[CodeError]:
    out = [CodeError(0, "I", "I" * n)]
    for q in range(1, n + 1):
        for a in letters:
            out.append(CodeError(1, f"{a}{q}", "I" * (q - 1) + a + "I" * (n - q)))
    return out


def _signed_sum(terms: Sequence[str], scale: float) -> np.ndarray:
    v = 0
    for t in terms:
        sign = -1.0 if t[0] == "-" else 1.0
        v = v + sign * basis_state(t.lstrip("+-"))
    return v * scale


def _flip_all(v: np.ndarray) -> np.ndarray:
    return v[::-1].copy()


_FIVE_ZERO = (
    "+00000 +10010 +01001 +10100 +01010 -11011 -00110 -11000 "
    "-11101 -00011 -11110 -01111 -10001 -01100 -10111 +00101"
).split()

_STEANE_ZERO = "0000000 1010101 0110011 1100110 0001111 1011010 0111100 1101001".split()

FIVE_QUBIT_STABILIZERS = ["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"]
STEANE_STABILIZERS = ["IIIXXXX", "IXXIIXX", "XIXIXIX", "IIIZZZZ", "IZZIIZZ", "ZIZIZIZ"]


def builtin_code(name: str) -> CodeSpec:
    """One of ``three_bitflip``, ``three_phaseflip``, ``five_qubit``, ``steane``."""
    if name == "three_bitflip":
        cw = (basis_state("000"), basis_state("111"))
        return CodeSpec(name, 3, cw, _single_qubit_errors(3, "X"), ["ZZI", "IZZ"])
    if name == "three_phaseflip":
        plus = np.array([1, 1], dtype=complex) / np.sqrt(2)
        minus = np.array([1, -1], dtype=complex) / np.sqrt(2)
        cw = (kron(plus, plus, plus), kron(minus, minus, minus))
        return CodeSpec(name, 3, cw, _single_qubit_errors(3, "Z"), ["XXI", "IXX"])
    if name == "five_qubit":
        zero = _signed_sum(_FIVE_ZERO, 0.25)
        return CodeSpec(name, 5, (zero, _flip_all(zero)), _single_qubit_errors(5, "XYZ"), list(FIVE_QUBIT_STABILIZERS))
    if name == "steane":
        zero = _signed_sum(_STEANE_ZERO, 1 / np.sqrt(8))
        return CodeSpec(name, 7, (zero, _flip_all(zero)), _single_qubit_errors(7, "XYZ"), list(STEANE_STABILIZERS))
    raise UnknownCodeError(name)


CODE_NAMES = ("three_bitflip", "three_phaseflip", "five_qubit", "steane")


def stabilizer_list(code: CodeSpec) -> list[str]:
    return list(code.stabilizers)


def pauli_commutes(a: str, b: str) -> bool:
    anti = sum(1 for x, y in zip(a, b) if x != "I" and y != "I" and x != y)
    return anti % 2 == 0


def syndrome_bits(code: CodeSpec, error: CodeError, indices: Sequence[int]) -> str:
    """``'1'`` for each listed stabilizer (1-based) commuting with the error, else ``'0'``.

    ``'1'`` (the unchanged auxiliary ground state) encodes eigenvalue +1.
    """
    return "".join("1" if pauli_commutes(code.stabilizers[i - 1], error.pauli) else "0" for i in indices)


def knill_laflamme(code: CodeSpec) -> tuple[np.ndarray, float]:
    """Return ``C_ij`` and the worst violation of ``<a|Ei^+ Ej|b> = C_ij delta_ab``."""
    ops = [e.operator() for e in code.errors]
    z0, z1 = code.codewords
    n = len(ops)
    c = np.zeros((n, n), dtype=complex)
    worst = 0.0
    for i, ei in enumerate(ops):
        for j, ej in enumerate(ops):
            g = ei.conj().T @ ej
            m00, m01 = np.vdot(z0, g @ z0), np.vdot(z0, g @ z1)
            m10, m11 = np.vdot(z1, g @ z0), np.vdot(z1, g @ z1)
            c[i, j] = m00
            worst = max(worst, abs(m01), abs(m10), abs(m00 - m11))
    return c, worst


# ---------------------------------------------------------------------------
# objectives


class ObjectiveKind(enum.Enum):
    FIXED_UNITARY_RE = "fixed_unitary_re"
    FIXED_UNITARY_ABS = "fixed_unitary_abs"
    SYNDROME = "syndrome"
    COHERENT_QEC = "coherent"
    LOGICAL_GATE = "logical_gate"
    STATE_PREP = "state_prep"


@dataclass
class Objective:
    """A compiled contract.

    ``outputs`` (``d x r``) and ``inputs`` (``d x m``) are column pools.
    Bracket ``b`` is ``sum coef * (outputs[:, f]^H U inputs[:, i])`` over the
    entries whose ``entry_bracket`` equals ``b``.
    """

    kind: ObjectiveKind
    n_qubits: int
    outputs: np.ndarray
    inputs: np.ndarray
    entry_bracket: np.ndarray
    entry_f: np.ndarray
    entry_i: np.ndarray
    entry_coef: np.ndarray
    n_brackets: int
    pair_p: np.ndarray
    pair_q: np.ndarray
    pair_w: np.ndarray
    lin_p: np.ndarray
    lin_w: np.ndarray
    max_value: float
    labels: list[str] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def phase_sensitive(self) -> bool:
        return self.lin_p.size > 0

    @property
    def n_terms(self) -> int:
        return len(self.labels)

    def brackets(self, m: np.ndarray) -> np.ndarray:
        """Bracket values from the ``r x m`` matrix ``outputs^H U inputs``."""
        out = np.zeros(self.n_brackets, dtype=complex)
        np.add.at(out, self.entry_bracket, self.entry_coef * m[self.entry_f, self.entry_i])
        return out

    def combine(self, b: np.ndarray, db: np.ndarray | None = None, d2b: np.ndarray | None = None):
        """Value and, if bracket derivatives are given, first and second derivative."""
        bp, bq = b[self.pair_p], b[self.pair_q]
        val = float(np.sum(self.pair_w * np.real(np.conj(bp) * bq)) + np.sum(self.lin_w * np.real(b[self.lin_p])))
        if db is None:
            return val
        dp, dq = db[self.pair_p], db[self.pair_q]
        d1 = float(
            np.sum(self.pair_w * np.real(np.conj(dp) * bq + np.conj(bp) * dq)) + np.sum(self.lin_w * np.real(db[self.lin_p]))
        )
        if d2b is None:
            return val, d1
        ep, eq = d2b[self.pair_p], d2b[self.pair_q]
        d2 = float(
            np.sum(self.pair_w * np.real(np.conj(ep) * bq + 2 * np.conj(dp) * dq + np.conj(bp) * eq))
            + np.sum(self.lin_w * np.real(d2b[self.lin_p]))
        )
        return val, d1, d2

    def projector_pairs(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Dense ``(p0, p1)`` operators for single-entry pair terms (small instances only)."""
        out = []
        for p, q in zip(self.pair_p, self.pair_q):
            ops = []
            for b in (p, q):
                sel = np.flatnonzero(self.entry_bracket == b)
                op = sum(
                    np.conj(self.entry_coef[e]) * np.outer(self.outputs[:, self.entry_f[e]], self.inputs[:, self.entry_i[e]].conj())
                    for e in sel
                )
                ops.append(op)
            out.append((ops[0], ops[1]))
        return out


class _Builder:
    def __init__(self, dim: int):
        self.dim = dim
        self.f: list[np.ndarray] = []
        self.i: list[np.ndarray] = []
        self.entries: list[tuple[int, int, int, complex]] = []
        self.n_brackets = 0
        self.pairs: list[tuple[int, int, float]] = []
        self.lin: list[tuple[int, float]] = []
        self.labels: list[str] = []

    def out(self, v: np.ndarray) -> int:
        self.f.append(np.asarray(v, dtype=complex))
        return len(self.f) - 1

    def inp(self, v: np.ndarray) -> int:
        self.i.append(np.asarray(v, dtype=complex))
        return len(self.i) - 1

    def bracket(self, entries: Sequence[tuple[int, int, complex]]) -> int:
        b = self.n_brackets
        self.n_brackets += 1
        for f, i, c in entries:
            self.entries.append((b, f, i, c))
        return b

    def build(self, kind: ObjectiveKind, max_value: float, **meta) -> Objective:
        n = self.dim.bit_length() - 1
        e = np.array(self.entries, dtype=object).reshape(-1, 4)
        pairs = np.array(self.pairs, dtype=float).reshape(-1, 3)
        lin = np.array(self.lin, dtype=float).reshape(-1, 2)
        return Objective(
            kind=kind,
            n_qubits=n,
            outputs=np.array(self.f).T.reshape(self.dim, -1),
            inputs=np.array(self.i).T.reshape(self.dim, -1),
            entry_bracket=e[:, 0].astype(int),
            entry_f=e[:, 1].astype(int),
            entry_i=e[:, 2].astype(int),
            entry_coef=e[:, 3].astype(complex),
            n_brackets=self.n_brackets,
            pair_p=pairs[:, 0].astype(int),
            pair_q=pairs[:, 1].astype(int),
            pair_w=pairs[:, 2],
            lin_p=lin[:, 0].astype(int),
            lin_w=lin[:, 1],
            max_value=float(max_value),
            labels=self.labels,
            meta=meta,
        )


def _outcome_state(bits: str | int, n_aux: int) -> np.ndarray:
    if isinstance(bits, int):
        return basis_state(bits, n_aux)
    if len(bits) != n_aux or set(bits) - {"0", "1"}:
        raise ValueError(f"outcome {bits!r} is not a {n_aux}-bit string")
    return basis_state(bits)


def default_outcome_map(errors: Sequence[CodeError], n_aux: int) -> dict[str, str]:
    """Error list order onto ascending auxiliary basis states."""
    return {e.label: format(k, f"0{n_aux}b") for k, e in enumerate(errors)}


def _syndrome(
    code: CodeSpec,
    errors: Sequence[CodeError],
    outcomes: Mapping[str, str | int],
    n_aux: int,
    aux_init: np.ndarray | None,
    **meta,
) -> Objective:
    init = code.aux_init(n_aux) if aux_init is None else np.asarray(aux_init, dtype=complex)
    b = _Builder((1 << code.n_code_qubits) * (1 << n_aux))
    for e in errors:
        eop = e.operator()
        out = _outcome_state(outcomes[e.label], n_aux)
        br = []
        for cw in code.codewords:
            v = eop @ cw
            br.append(b.bracket([(b.out(kron(v, out)), b.inp(kron(v, init)), 1.0)]))
        b.pairs.append((br[0], br[1], 1.0))
        b.labels.append(e.label)
    outcome_strs = {k: (v if isinstance(v, str) else format(v, f"0{n_aux}b")) for k, v in outcomes.items()}
    return b.build(ObjectiveKind.SYNDROME, len(errors), code=code.name, n_aux=n_aux, outcomes=outcome_strs, **meta)


def syndrome_objective(
    code: CodeSpec,
    error_to_outcome: Mapping[str, str | int] | None = None,
    n_aux: int | None = None,
    errors: Sequence[CodeError] | None = None,
    aux_init: np.ndarray | None = None,
) -> Objective:
    """Objective maximal exactly for syndrome maps ``E_j|l_L>|0_A> -> e^{i phi_j} E_j|l_L>|e_j>``.

    Raises
    ------
    AuxTooSmallError
        If ``2**n_aux`` cannot hold one outcome per error.
    NonInjectiveOutcomeMapError
        If two errors share an outcome.
    """
    errors = list(code.errors if errors is None else errors)
    n_aux = code.n_aux_qubits if n_aux is None else n_aux
    if (1 << n_aux) < len(errors):
        raise AuxTooSmallError(f"{len(errors)} errors need more than {n_aux} auxiliary qubit(s)")
    outcomes = dict(error_to_outcome) if error_to_outcome is not None else default_outcome_map(errors, n_aux)
    missing = [e.label for e in errors if e.label not in outcomes]
    if missing:
        raise ValueError(f"no outcome assigned to {missing}")
    seen: dict[str, str] = {}
    for e in errors:
        key = str(_outcome_state(outcomes[e.label], n_aux).argmax())
        if key in seen:
            raise NonInjectiveOutcomeMapError(f"{seen[key]} and {e.label} share an outcome")
        seen[key] = e.label
    return _syndrome(code, errors, outcomes, n_aux, aux_init)


def stabilizer_objective(
    code: CodeSpec,
    indices: Sequence[int],
    representatives: str = "minimal",
    aux_init: np.ndarray | None = None,
) -> Objective:
    """Syndrome objective for measuring stabilizers ``indices`` (1-based), one aux qubit each.

    Aux qubit ``k`` ends in ``|1>`` for eigenvalue +1 and ``|0>`` for -1.
    ``representatives='minimal'`` keeps one error per distinct eigenvalue
    pattern (two terms for a single stabilizer); ``'full'`` keeps every error.
    """
    indices = list(indices)
    if not code.stabilizers:
        raise ValueError(f"{code.name} has no stabilizers")
    for i in indices:
        if not 1 <= i <= len(code.stabilizers):
            raise IndexError(f"stabilizer {i} outside 1..{len(code.stabilizers)}")
    n_aux = len(indices)
    outcomes = {e.label: syndrome_bits(code, e, indices) for e in code.errors}
    if representatives == "full":
        chosen = list(code.errors)
    elif representatives == "minimal":
        chosen, seen = [], set()
        for e in code.errors:
            if outcomes[e.label] not in seen:
                seen.add(outcomes[e.label])
                chosen.append(e)
    else:
        raise ValueError(representatives)
    return _syndrome(code, chosen, outcomes, n_aux, aux_init, stabilizers=indices)


def coherent_objective(
    code: CodeSpec,
    n_aux: int | None = None,
    errors: Sequence[CodeError] | None = None,
    aux_init: np.ndarray | None = None,
) -> Objective:
    """Objective for measurement-free correction with an unconstrained final aux state.

    Each term contracts the aux-space vectors
    ``|a_lj> = (<l_L| x 1) U (E_j|l_L> x |0_A>)`` for ``l = 0, 1``.
    """
    errors = list(code.errors if errors is None else errors)
    n_aux = code.n_aux_qubits if n_aux is None else n_aux
    init = code.aux_init(n_aux) if aux_init is None else np.asarray(aux_init, dtype=complex)
    d_aux = 1 << n_aux
    b = _Builder((1 << code.n_code_qubits) * d_aux)
    outs = [[b.out(kron(cw, basis_state(k, n_aux))) for k in range(d_aux)] for cw in code.codewords]
    for e in errors:
        eop = e.operator()
        ins = [b.inp(kron(eop @ cw, init)) for cw in code.codewords]
        for k in range(d_aux):
            b0 = b.bracket([(outs[0][k], ins[0], 1.0)])
            b1 = b.bracket([(outs[1][k], ins[1], 1.0)])
            b.pairs.append((b0, b1, 1.0))
        b.labels.append(e.label)
    return b.build(ObjectiveKind.COHERENT_QEC, len(errors), code=code.name, n_aux=n_aux)


def logical_gate_objective(code: CodeSpec, gate: np.ndarray, errors: Sequence[CodeError] | None = None) -> Objective:
    """Objective for a logical gate that maps errors only within their hierarchy level.

    Terms are indexed by level ``h``, input error ``j`` and output error ``k``;
    the value sums over ``k`` inside each ``(h, j)``.
    """
    gate = np.asarray(gate, dtype=complex)
    if gate.shape != (2, 2) or not is_unitary(gate):
        raise NonUnitaryGateError("gate must be a 2x2 unitary")
    errors = list(code.errors if errors is None else errors)
    levels: dict[int, list[CodeError]] = {}
    for e in errors:
        levels.setdefault(e.level, []).append(e)
    b = _Builder(1 << code.n_code_qubits)
    z0, z1 = code.codewords
    gated = [gate[0, l] * z0 + gate[1, l] * z1 for l in (0, 1)]
    for h in sorted(levels):
        errs = levels[h]
        ops = [e.operator() for e in errs]
        outs = [[b.out(op @ g) for g in gated] for op in ops]
        for ej, opj in zip(errs, ops):
            ins = [b.inp(opj @ cw) for cw in code.codewords]
            for k in range(len(errs)):
                b0 = b.bracket([(outs[k][0], ins[0], 1.0)])
                b1 = b.bracket([(outs[k][1], ins[1], 1.0)])
                b.pairs.append((b0, b1, 1.0))
            b.labels.append(f"{h}:{ej.label}")
    return b.build(ObjectiveKind.LOGICAL_GATE, len(errors), code=code.name, gate=gate)


def state_prep_objective(target: np.ndarray, init: np.ndarray) -> Objective:
    """``|<target|U|init>|^2``; maximal (1) for any global phase."""
    target = np.asarray(target, dtype=complex)
    init = np.asarray(init, dtype=complex)
    if target.shape != init.shape:
        raise DimensionMismatchError(f"target {target.shape} vs init {init.shape}")
    for name, v in (("target", target), ("init", init)):
        if abs(np.linalg.norm(v) - 1) > 1e-9:
            raise ValueError(f"{name} is not normalized")
    b = _Builder(target.size)
    br = b.bracket([(b.out(target), b.inp(init), 1.0)])
    b.pairs.append((br, br, 1.0))
    b.labels.append("state")
    return b.build(ObjectiveKind.STATE_PREP, 1.0)


def fixed_unitary_objective(target: np.ndarray, mode: str = "abs") -> Objective:
    """``Re tr(T^+ U)`` (``mode='re'``, max ``d``) or ``|tr(T^+ U)|^2 / d^2`` (``'abs'``, max 1)."""
    target = np.asarray(target, dtype=complex)
    d = target.shape[0]
    b = _Builder(d)
    if mode == "re":
        br = b.bracket([(b.out(target[:, k]), b.inp(basis_state(k, d.bit_length() - 1)), 1.0) for k in range(d)])
        b.lin.append((br, 1.0))
        b.labels.append("trace")
        return b.build(ObjectiveKind.FIXED_UNITARY_RE, d)
    if mode == "abs":
        br = b.bracket([(b.out(target[:, k]), b.inp(basis_state(k, d.bit_length() - 1)), 1.0 / d) for k in range(d)])
        b.pairs.append((br, br, 1.0))
        b.labels.append("trace")
        return b.build(ObjectiveKind.FIXED_UNITARY_ABS, 1.0)
    raise ValueError(mode)


HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PI_8 = np.diag([1, np.exp(1j * np.pi / 4)])
NAMED_GATES = {
    "I": np.eye(2, dtype=complex),
    "X": PAULI["X"],
    "Y": PAULI["Y"],
    "Z": PAULI["Z"],
    "H": HADAMARD,
    "T": PI_8,
    "pi8": PI_8,
}


def all_outcomes(n_aux: int) -> list[str]:
    return ["".join(bits) for bits in product("01", repeat=n_aux)]
