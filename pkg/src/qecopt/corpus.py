"""Known-good sequences with their contracts, used as a regression corpus."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import codes
from .gateset import Kind, Pulse, PulseSequence
from .seqfile import format_angle, parse_sequence
from .verifier import VerificationReport, verify_coherent, verify_logical_gate, verify_state_prep, verify_syndrome


@dataclass
class Contract:
    kind: str  # syndrome | stabilizer | coherent | state_prep | logical_gate
    code: str
    stabilizers: list[int] = field(default_factory=list)
    target: np.ndarray | None = None
    gate: np.ndarray | None = None


@dataclass
class Fixture:
    name: str
    sequence: PulseSequence
    contract: Contract

    def verify(self, tol: float = 1e-9) -> VerificationReport:
        return verify_fixture(self.sequence, self.contract, tol)


def verify_fixture(seq: PulseSequence, c: Contract, tol: float = 1e-9) -> VerificationReport:
    if c.kind == "state_prep":
        return verify_state_prep(seq, c.target, tol=tol)
    code = codes.builtin_code(c.code)
    if c.kind == "syndrome":
        return verify_syndrome(seq, code, tol=tol)
    if c.kind == "stabilizer":
        return verify_syndrome(seq, code, stabilizers=c.stabilizers, tol=tol)
    if c.kind == "coherent":
        return verify_coherent(seq, code, tol=tol)
    if c.kind == "logical_gate":
        return verify_logical_gate(seq, code, c.gate, tol=tol)
    raise ValueError(f"unknown contract {c.kind!r}")


def _seq(n: int, body: str) -> PulseSequence:
    """Body uses one pulse per ``;``-separated item."""
    return parse_sequence(f"qubits {n}\n" + "\n".join(x.strip() for x in body.split(";") if x.strip()))


def remap_z(seq: PulseSequence, mapping: dict[int, int]) -> PulseSequence:
    """Relabel the targets of ``z`` pulses; other pulses are untouched."""
    out = [Pulse(Kind.Z, p.theta, (mapping.get(p.target, p.target),)) if p.kind is Kind.Z else p for p in seq]
    return PulseSequence(seq.n_qubits, out)


BITFLIP_SYNDROME = (
    "Y -pi/2; z 4 -pi/2; X -pi/4; z 3 pi; X 3/4 pi; X2 pi/4; z 1 pi; X2 pi/4; M 4; R 4;"
    "X2 pi/4; z 2 pi; X2 pi/4; Y -3/4 pi; z 4 pi; Y pi/4; M 4"
)
PHASEFLIP_SYNDROME = (
    "X pi/4; z 4 pi; z 3 pi; X -pi/4; X2 pi/4; z 1 pi; X2 pi/4; X pi/2; M 4; R 4;"
    "X2 pi/4; z 2 pi; X2 pi/4; Y pi; M 4"
)
THREE_QUBIT_COHERENT = (
    "z 2 pi/2; X2 pi/2; z 2 pi/2; z 1 pi/2; X pi/2; z 4 pi/2; X2 pi/2; z 2 pi; Y -pi/4; z 4 pi/2;"
    "z 1 -pi/2; X2 pi/2; z 2 pi/2; z 1 pi/2; R 4; X2 pi/2; z 3 pi/2; X pi/2; z 2 pi/2; X2 pi/2;"
    "z 1 pi/4; z 4 pi/2; z 3 -pi/2; X2 pi/2; z 1 pi/2; X pi/2; R 4"
)
FIVE_ZERO = (
    "X pi/2; z 5 pi/2; X2 pi/4; X -pi/4; z 1 pi; z 3 pi; X2 pi/4; X 3/4 pi; z 5 pi/2; X -pi/2;"
    "X2 pi/4; z 1 pi; z 4 pi; X2 pi/4; z 5 pi/2"
)
FIVE_ONE = (
    "X -pi/2; z 5 pi/2; X2 pi/4; X pi/4; z 1 pi; z 3 pi; X2 pi/4; X -3/4 pi; z 5 pi/2; X -pi/2;"
    "X2 pi/4; z 1 pi; z 4 pi; X2 pi/4; z 5 -pi/2"
)
FIVE_STABILIZER = (
    "X -pi/2; z 2 pi/2; z 3 pi/2; X pi/4; X2 pi/4; z 5 pi; X2 pi/4; z 6 pi; X pi/4; z 2 pi/2;"
    "z 3 pi/2; X -pi/2; z 5 pi; M 6"
)
FIVE_ALL_STABILIZERS = (
    "z 3 pi/2; X pi/2; z 3 pi/2; z 2 pi/2; X2 pi/4; z 5 pi; X2 pi/4; z 2 pi/2; X -pi/2; z 2 pi/2;"
    "z 4 pi/2; M 6; R 6; X2 pi/4; z 1 pi; X2 pi/4; z 3 pi/2; M 6; R 6; z 5 pi/2; X2 pi/4; z 2 pi;"
    "X2 pi/4; z 4 pi/2; z 1 pi/2; M 6; R 6; X -pi/2; z 1 pi/2; X2 pi/4; z 3 pi; X2 pi/4; z 1 pi/2;"
    "z 5 pi/2; X pi/2; z 5 pi/2; M 6"
)
STEANE_ZERO_22 = (
    "Y -pi/2; z 3 pi/2; z 4 pi/2; X -pi/2; z 5 pi/2; X2 pi/2; z 7 pi/2; z 6 pi/2; z 3 -pi/2; X2 pi/2;"
    "z 5 pi/2; X pi/2; z 7 pi/2; z 3 pi/2; z 1 pi/2; X2 pi/2; z 2 pi/2; z 3 pi/2; X2 pi/2; z 5 pi/2;"
    "z 7 pi/2; X -pi/2"
)
STEANE_SUBSET_MS = (
    "Y -pi/2; z 6 pi/2; z 7 pi/2; z 1 pi/2; Y2 pi/2; X pi/4; z 5 pi; z 2 pi; z 7 pi; X pi/4; Y2 pi/2;"
    "z 4 pi/2; z 3 pi/2; z 7 pi/2; X pi/4; Y -pi/2; z 5 pi/2; MSY2 1,3,5,7 pi/2; z 7 -pi/2"
)
STEANE_STABILIZER_1 = (
    "X pi/4; z 2 pi; z 8 pi; X2 pi/8; z 3 pi; z 1 pi; X pi/4; X2 pi/8; z 1 pi; z 2 pi; X2 pi/8;"
    "z 3 pi; z 1 pi; X2 pi/8; z 1 pi; M 8"
)
STEANE_STABILIZER_4 = (
    "Y pi/2; X -pi/4; z 8 pi/2; X2 pi/8; z 3 pi; z 2 pi; X2 pi/8; z 2 pi; z 1 pi; X2 pi/8; z 2 pi;"
    "z 3 pi; X2 pi/8; z 3 pi; z 8 pi/2; X 3/4 pi; Y pi/2; M 8"
)
FIVE_HADAMARD = (
    "z 3 pi/2; z 4 pi/2; X pi/2; z 3 pi/2; Y2 pi/2; z 4 pi/2; z 1 pi/2; X pi/2; z 1 -pi/2; Y2 pi/2;"
    "z 1 pi/2; z 2 pi/2; X pi/2; Y2 pi/2; z 4 pi/2; z 1 pi/2; Y2 pi/2; z 4 pi/2; z 2 pi/2"
)
STEANE_PI8 = (
    "X pi/2; z 5 pi/2; Y2 pi/2; z 5 -pi/2; X pi/2; z 5 3/4 pi; Y2 pi/2; X -pi/4; z 5 pi/2; Y2 pi/2;"
    "X pi/2; Y2 pi/2; z 5 pi/4; Y pi/2; z 5 pi/4; Y2 pi/2; X pi/2; Y2 pi/2; z 5 pi/2; X -pi/4; Y2 pi/2"
)

# rearranged code-qubit labels deriving the remaining Steane stabilizers from 1 and 4
STEANE_REMAP = {2: {1: 1, 2: 4, 3: 5}, 3: {1: 2, 2: 4, 3: 6}}


def five_qubit_parametric(alpha: float, first_y_negative: bool = False) -> PulseSequence:
    """Prepares ``sin a |0_L> + cos a |1_L>`` (or ``cos a |0_L> - sin a |1_L>`` with ``Y(-pi/2)`` first)."""
    first = "-pi/2" if first_y_negative else "pi/2"
    return _seq(
        5,
        f"Y {first}; z 3 -pi/2; z 5 pi/2; Y2 pi/2; z 4 pi/2; X pi/2; z 1 pi/2; Y2 pi/2; z 3 pi/2; z 2 pi/2;"
        f"Y pi/2; z 1 {format_angle(2 * alpha)}; Y -pi/2; Y2 pi/2; z 1 pi/2",
    )


def steane_parametric(alpha: float) -> PulseSequence:
    """Prepares ``cos a |0_L> + sin a |1_L>`` on the Steane code."""
    return _seq(
        7,
        f"Y pi/2; z 7 pi/2; Y2 pi/2; z 7 {format_angle(2 * alpha - np.pi / 2)}; X -pi/2; z 1 pi/2; z 4 pi/2;"
        "Y2 pi/2; z 7 pi/2; z 5 pi/2; Y2 pi/2; z 3 -pi/2; z 4 pi/2; Y2 pi/2; z 2 pi/2; z 7 pi/2; Y2 pi/2;"
        "z 6 pi/2; z 4 pi/2; X pi/2; Y pi/2; z 7 pi/2; z 1 pi/2",
    )


def five_qubit_parametric_target(alpha: float, first_y_negative: bool = False) -> np.ndarray:
    code = codes.builtin_code("five_qubit")
    if first_y_negative:
        return code.logical(np.cos(alpha), -np.sin(alpha))
    return code.logical(np.sin(alpha), np.cos(alpha))


def five_qubit_stabilizer(index: int) -> PulseSequence:
    """Stabilizer ``index`` (1..4) by cyclically shifting the code-qubit ``z`` targets."""
    shift = index - 1
    base = _seq(6, FIVE_STABILIZER)
    return remap_z(base, {j: (j - 1 + shift) % 5 + 1 for j in range(1, 6)})


def steane_stabilizer(index: int) -> PulseSequence:
    """Steane stabilizer ``index`` (1..6); 2, 3, 5, 6 relabel the ``z`` targets of 1 and 4."""
    base = _seq(8, STEANE_STABILIZER_1 if index <= 3 else STEANE_STABILIZER_4)
    r = (index - 1) % 3 + 1
    return base if r == 1 else remap_z(base, STEANE_REMAP[r])


def four_stabilizer_assembly() -> PulseSequence:
    """Four single-stabilizer sequences back to back on one reused auxiliary qubit (52 unitaries)."""
    pulses = []
    for k in range(1, 5):
        pulses += list(five_qubit_stabilizer(k))
        if k < 4:
            pulses.append(Pulse(Kind.RESET, None, (6,)))
    return PulseSequence(6, pulses)


DEFAULT_ALPHA = np.pi / 5


def regression_corpus() -> list[Fixture]:
    five = codes.builtin_code("five_qubit")
    steane = codes.builtin_code("steane")
    a = DEFAULT_ALPHA
    fx = [
        Fixture("three_bitflip_syndrome", _seq(4, BITFLIP_SYNDROME), Contract("syndrome", "three_bitflip")),
        Fixture("three_phaseflip_syndrome", _seq(4, PHASEFLIP_SYNDROME), Contract("syndrome", "three_phaseflip")),
        Fixture("three_bitflip_coherent", _seq(4, THREE_QUBIT_COHERENT), Contract("coherent", "three_bitflip")),
        Fixture("five_zero", _seq(5, FIVE_ZERO), Contract("state_prep", "five_qubit", target=five.codewords[0])),
        Fixture("five_one", _seq(5, FIVE_ONE), Contract("state_prep", "five_qubit", target=five.codewords[1])),
        Fixture("five_parametric", five_qubit_parametric(a), Contract("state_prep", "five_qubit", target=five_qubit_parametric_target(a))),
        Fixture(
            "five_parametric_negative_y",
            five_qubit_parametric(a, True),
            Contract("state_prep", "five_qubit", target=five_qubit_parametric_target(a, True)),
        ),
    ]
    for k in range(1, 5):
        fx.append(Fixture(f"five_stabilizer_{k}", five_qubit_stabilizer(k), Contract("stabilizer", "five_qubit", [k])))
    fx.append(Fixture("five_all_stabilizers", _seq(6, FIVE_ALL_STABILIZERS), Contract("stabilizer", "five_qubit", [1, 2, 3, 4])))
    fx += [
        Fixture("steane_parametric", steane_parametric(a), Contract("state_prep", "steane", target=steane.logical(np.cos(a), np.sin(a)))),
        Fixture("steane_zero", _seq(7, STEANE_ZERO_22), Contract("state_prep", "steane", target=steane.codewords[0])),
        Fixture(
            "steane_one",
            _seq(7, STEANE_ZERO_22.replace("Y -pi/2", "Y pi/2", 1)),
            Contract("state_prep", "steane", target=steane.codewords[1]),
        ),
        Fixture("steane_zero_subset_ms", _seq(7, STEANE_SUBSET_MS), Contract("state_prep", "steane", target=steane.codewords[0])),
    ]
    for k in range(1, 7):
        fx.append(Fixture(f"steane_stabilizer_{k}", steane_stabilizer(k), Contract("stabilizer", "steane", [k])))
    fx += [
        Fixture("five_hadamard", _seq(5, FIVE_HADAMARD), Contract("logical_gate", "five_qubit", gate=codes.HADAMARD)),
        Fixture("steane_pi8", _seq(7, STEANE_PI8), Contract("logical_gate", "steane", gate=codes.PI_8)),
    ]
    return fx
