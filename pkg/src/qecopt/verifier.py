"""Branching simulation and contract checks for complete sequences.

Measurements split a state into outcome branches that carry their
probability as squared norm. A reset is only allowed where the qubit is
pure within its branch; the qubit is then replaced by ``|1>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .codes import CodeSpec, logical_gate_objective, syndrome_bits
from .gateset import Kind, PulseSequence, apply_pulse
from .objective import evaluate_unitary
from .tensor import TOL, DimensionMismatchError, basis_state


class ResetOnEntangledQubitError(RuntimeError):
    pass


class NonUnitarySequenceError(ValueError):
    pass


@dataclass
class Branch:
    state: np.ndarray
    outcomes: list[tuple[int, int]] = field(default_factory=list)

    @property
    def weight(self) -> float:
        return float(np.vdot(self.state, self.state).real)

    @property
    def bits(self) -> str:
        return "".join(str(b) for _, b in self.outcomes)


def _qubit_view(state: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """``(2**(q-1), 2, 2**(n-q))`` view with the selected qubit in the middle."""
    return state.reshape(1 << (qubit - 1), 2, 1 << (n - qubit))


def simulate(seq: PulseSequence, state: np.ndarray) -> list[Branch]:
    """Run ``seq`` on ``state`` and return every surviving branch."""
    n = seq.n_qubits
    state = np.asarray(state, dtype=complex)
    if state.shape != (1 << n,):
        raise DimensionMismatchError(f"state of length {state.shape[0]} for {n} qubits")
    branches = [Branch(state.copy())]
    for p in seq:
        if p.kind.is_unitary:
            for b in branches:
                b.state = apply_pulse(p, n, b.state)
        elif p.kind is Kind.MEASURE:
            out = []
            for b in branches:
                v = _qubit_view(b.state, p.target, n)
                for bit in (0, 1):
                    proj = np.zeros_like(v)
                    proj[:, bit, :] = v[:, bit, :]
                    nb = Branch(proj.reshape(-1), b.outcomes + [(p.target, bit)])
                    if nb.weight >= TOL.branch_drop:
                        out.append(nb)
            branches = out
        else:
            for b in branches:
                b.state = _reset(b.state, p.target, n)
    return branches


def _reset(state: np.ndarray, qubit: int, n: int) -> np.ndarray:
    v = _qubit_view(state, qubit, n)
    w = float(np.vdot(state, state).real)
    rho = np.einsum("aib,ajb->ij", v, v.conj()) / w
    evals, evecs = np.linalg.eigh(rho)
    if evals[-1] < 1 - TOL.purity:
        raise ResetOnEntangledQubitError(f"qubit {qubit} is not pure (largest eigenvalue {evals[-1]:.3e})")
    phi = evecs[:, -1]
    # fixed gauge so equal rays give equal vectors across runs
    lead = int(np.flatnonzero(np.abs(phi) >= np.max(np.abs(phi)) - 1e-6)[0])
    phi = phi * (abs(phi[lead]) / phi[lead])
    rest = np.einsum("aib,i->ab", v, phi.conj())
    out = np.zeros_like(v)
    out[:, 1, :] = rest
    return out.reshape(-1)


# ---------------------------------------------------------------------------
# reports


@dataclass
class ErrorResult:
    label: str
    outcome: str
    fidelity: float
    phase: float
    ok: bool
    note: str = ""


@dataclass
class VerificationReport:
    contract: str
    passed: bool
    worst_fidelity: float
    results: list[ErrorResult] = field(default_factory=list)
    outcome_map: dict[str, str] = field(default_factory=dict)
    messages: list[str] = field(default_factory=list)

    def records(self) -> str:
        """Line-oriented ``key=value`` form; blank lines separate groups."""
        head = [
            f"contract={self.contract}",
            f"pass={'true' if self.passed else 'false'}",
            f"worst_fidelity={self.worst_fidelity:.15f}",
        ]
        head += [f"message={m}" for m in self.messages]
        groups = ["\n".join(head)]
        for r in self.results:
            lines = [f"error={r.label}", f"outcome={r.outcome}", f"fidelity={r.fidelity:.15f}", f"phase={r.phase:.12f}", f"ok={'true' if r.ok else 'false'}"]
            if r.note:
                lines.append(f"note={r.note}")
            groups.append("\n".join(lines))
        return "\n\n".join(groups) + "\n"


def _inputs(code: CodeSpec) -> list[tuple[str, np.ndarray]]:
    z0, z1 = code.codewords
    return [("0", z0), ("1", z1), ("+", (z0 + z1) / np.sqrt(2))]


def _split(state: np.ndarray, n_code: int) -> np.ndarray:
    """Reshape a joint state to ``(code, aux)``."""
    return state.reshape(1 << n_code, -1)


def _dominant_aux(mat: np.ndarray) -> tuple[np.ndarray, float]:
    """Leading right singular vector (aux part) and its squared singular value share."""
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    total = float(np.sum(s**2))
    return vh[0], float(s[0] ** 2 / total) if total else 0.0


def verify_syndrome(
    seq: PulseSequence,
    code: CodeSpec,
    stabilizers: list[int] | None = None,
    errors=None,
    tol: float = 1e-9,
) -> VerificationReport:
    """Check a measuring sequence against the syndrome contract.

    With ``stabilizers`` the outcome string must equal the stabilizer
    eigenvalue pattern (``'1'`` for +1) and errors with equal patterns may
    share an outcome; otherwise the discovered map must be injective.
    """
    errors = list(code.errors if errors is None else errors)
    n_code = code.n_code_qubits
    n_aux = seq.n_qubits - n_code
    if n_aux < 1:
        raise DimensionMismatchError("sequence has no auxiliary qubits")
    init = basis_state("1" * n_aux)
    report = VerificationReport("stabilizer" if stabilizers else "syndrome", True, 1.0)
    for e in errors:
        eop = e.operator()
        outcome, ok, note = None, True, []
        amps, fids = [], []
        aux_ref = None
        for name, cw in _inputs(code):
            expected = eop @ cw
            branches = simulate(seq, np.kron(expected, init))
            live = [b for b in branches if b.weight > 1 - TOL.determinism]
            if len(live) != 1 or sum(b.weight for b in branches) - live[0].weight > TOL.determinism:
                ok = False
                note.append(f"nondeterministic on input {name}")
                fids.append(0.0)
                continue
            b = live[0]
            if outcome is None:
                outcome = b.bits
            elif b.bits != outcome:
                ok = False
                note.append("outcome depends on the logical state")
            mat = _split(b.state / np.sqrt(b.weight), n_code)
            if aux_ref is None:
                aux_ref, _ = _dominant_aux(mat)
            code_vec = mat @ aux_ref.conj()
            a = complex(np.vdot(expected, code_vec))
            amps.append(a)
            fids.append(min(1.0, abs(a) ** 2))
        fid = min(fids)
        phase = float(np.angle(amps[0])) if amps else 0.0
        if amps and max(abs(a - amps[0]) for a in amps) > 1e-6:
            ok = False
            note.append("post-measurement phase differs between logical states")
        if fid < 1 - tol:
            ok = False
            note.append("post-measurement code state differs from E|l>")
        if stabilizers and outcome is not None:
            want = syndrome_bits(code, e, stabilizers)
            if outcome != want:
                ok = False
                note.append(f"expected outcome {want}")
        outcome = outcome if outcome is not None else "?"
        report.results.append(ErrorResult(e.label, outcome, fid, phase, ok, "; ".join(note)))
        report.outcome_map[e.label] = outcome
    if not stabilizers:
        seen: dict[str, str] = {}
        for lbl, out in report.outcome_map.items():
            if out in seen:
                report.messages.append(f"errors {seen[out]} and {lbl} share outcome {out}")
            seen.setdefault(out, lbl)
    report.worst_fidelity = min((r.fidelity for r in report.results), default=1.0)
    report.passed = all(r.ok for r in report.results) and not report.messages
    return report


def verify_coherent(seq: PulseSequence, code: CodeSpec, errors=None, tol: float = 1e-9) -> VerificationReport:
    """Check a measurement-free correction sequence (resets allowed)."""
    errors = list(code.errors if errors is None else errors)
    n_code = code.n_code_qubits
    n_aux = seq.n_qubits - n_code
    init = basis_state("1" * n_aux)
    report = VerificationReport("coherent", True, 1.0)
    for e in errors:
        eop = e.operator()
        ok, note, amps, fids = True, [], [], []
        aux_ref = None
        for name, cw in _inputs(code):
            try:
                branches = simulate(seq, np.kron(eop @ cw, init))
            except ResetOnEntangledQubitError as exc:
                ok = False
                note.append(f"input {name}: {exc}")
                fids.append(0.0)
                continue
            if len(branches) != 1:
                ok = False
                note.append("measurement branches in a coherent sequence")
            st = branches[0].state
            mat = _split(st / np.linalg.norm(st), n_code)
            aux, share = _dominant_aux(mat)
            if share < 1 - tol:
                ok = False
                note.append(f"aux entangled with code on input {name}")
            if aux_ref is None:
                aux_ref = aux
            elif abs(np.vdot(aux_ref, aux)) ** 2 < 1 - tol:
                ok = False
                note.append("final aux state depends on the logical state")
            a = complex(np.vdot(cw, mat @ aux_ref.conj()))
            amps.append(a)
            fids.append(min(1.0, abs(a) ** 2))
        fid = min(fids)
        if amps and max(abs(a - amps[0]) for a in amps) > 1e-6:
            ok = False
            note.append("phase differs between logical states")
        if fid < 1 - tol:
            ok = False
            note.append("code register not restored")
        report.results.append(ErrorResult(e.label, "", fid, float(np.angle(amps[0])) if amps else 0.0, ok, "; ".join(note)))
    report.worst_fidelity = min((r.fidelity for r in report.results), default=1.0)
    report.passed = all(r.ok for r in report.results)
    return report


def verify_state_prep(seq: PulseSequence, target: np.ndarray, init: np.ndarray | None = None, tol: float = 1e-9) -> VerificationReport:
    """Run on ``|1...1>`` (or ``init``) and compare with ``target`` up to phase."""
    target = np.asarray(target, dtype=complex)
    init = basis_state("1" * seq.n_qubits) if init is None else np.asarray(init, dtype=complex)
    if target.shape != init.shape:
        raise DimensionMismatchError(f"target of length {target.shape[0]} for {seq.n_qubits} qubits")
    branches = simulate(seq, init)
    live = [b for b in branches if b.weight > 1 - TOL.determinism]
    report = VerificationReport("state_prep", True, 0.0)
    if len(live) != 1:
        report.passed = False
        report.messages.append(f"{len(branches)} branches, none dominant")
        return report
    b = live[0]
    ov = complex(np.vdot(target, b.state / np.sqrt(b.weight)))
    fid = min(1.0, abs(ov) ** 2)
    report.worst_fidelity = fid
    report.results.append(ErrorResult("state", b.bits, fid, float(np.angle(ov)), fid >= 1 - tol))
    report.passed = fid >= 1 - tol
    return report


def logical_matrix(u: np.ndarray, code: CodeSpec) -> np.ndarray:
    z = np.stack(code.codewords, axis=1)
    return z.conj().T @ u @ z


def verify_logical_gate(seq: PulseSequence, code: CodeSpec, gate: np.ndarray, tol: float = 1e-9) -> VerificationReport:
    """Logical action, objective maximum and hierarchy-level preservation."""
    if not seq.is_unitary_only:
        raise NonUnitarySequenceError("logical gate sequences must be unitary")
    gate = np.asarray(gate, dtype=complex)
    u = seq.unitary()
    report = VerificationReport("logical_gate", True, 1.0)
    lm = logical_matrix(u, code)
    k = np.unravel_index(np.argmax(np.abs(gate)), gate.shape)
    phase = lm[k] / gate[k] if abs(lm[k]) > 0 else 1.0
    phase = phase / abs(phase) if abs(phase) > 0 else 1.0
    dev = float(np.max(np.abs(lm - phase * gate)))
    if dev > 1e-6:
        report.passed = False
        report.messages.append(f"logical action deviates by {dev:.3e}")
    obj = logical_gate_objective(code, gate)
    val = evaluate_unitary(obj, u)
    if val < obj.max_value - 1e-8:
        report.passed = False
        report.messages.append(f"level objective {val:.12f} below {obj.max_value}")
    z = np.stack(code.codewords, axis=1)
    images = u @ z
    level1 = [e for e in code.errors if e.level == 1]
    span = np.concatenate([e.operator() @ images for e in level1], axis=1)
    q, r = np.linalg.qr(span)
    q = q[:, np.abs(np.diag(r)) > 1e-9]
    code_proj = images  # orthonormal columns
    for e in level1:
        worst_out, worst_l0 = 0.0, 0.0
        for l in (0, 1):
            v = u @ (e.operator() @ z[:, l])
            worst_out = max(worst_out, float(np.linalg.norm(v - q @ (q.conj().T @ v))))
            worst_l0 = max(worst_l0, float(np.linalg.norm(code_proj.conj().T @ v)))
        ok = worst_out < 1e-6 and worst_l0 < 1e-6
        fid = max(0.0, 1.0 - max(worst_out, worst_l0) ** 2)
        report.results.append(ErrorResult(e.label, "", fid, 0.0, ok, "" if ok else f"leaves level: {worst_out:.2e}, {worst_l0:.2e}"))
    gate_fid = min(1.0, abs(np.trace(gate.conj().T @ lm)) ** 2 / 4)
    report.worst_fidelity = min([gate_fid] + [r.fidelity for r in report.results])
    report.passed = report.passed and all(r.ok for r in report.results)
    return report
