"""ASCII circuit diagrams with symbol width proportional to the rotation angle.

One row per qubit, time runs left to right. A rotation by ``pi`` occupies
``CELLS_PER_PI`` character cells; every symbol is at least one cell wide.
Negative ``z`` rotations are drawn as their positive counterpart
``z(2 pi - |theta|)``, which is the same physical operation up to a global
phase. Collective pulses fill every row of their register, ``z`` only its
own row. Measurements and resets appear as ``[M]`` and ``[R~]``.
"""

from __future__ import annotations

import math

from .gateset import Kind, Pulse, PulseSequence

CELLS_PER_PI = 8
WIRE = "-"
GAP = WIRE

_FILL = {
    Kind.X: "X",
    Kind.Y: "Y",
    Kind.XX: "#",
    Kind.YY: "%",
    Kind.SUBSET_YY: "%",
    Kind.Z: "z",
}


def display_angle(p: Pulse) -> float:
    """Angle whose magnitude sets the drawn width."""
    theta = p.theta or 0.0
    if p.kind is Kind.Z and theta < 0:
        return 2 * math.pi - (abs(theta) % (2 * math.pi))
    return abs(theta)


def symbol_width(p: Pulse) -> int:
    if not p.kind.is_unitary:
        return 3 if p.kind is Kind.MEASURE else 4
    return max(1, round(CELLS_PER_PI * display_angle(p) / math.pi))


def pulse_rows(p: Pulse, n_qubits: int) -> tuple[int, ...]:
    """1-based rows covered by the pulse."""
    if p.kind in (Kind.Z, Kind.MEASURE, Kind.RESET, Kind.SUBSET_YY):
        return tuple(p.qubits)
    return tuple(p.qubits) if p.qubits else tuple(range(1, n_qubits + 1))


def _cell(p: Pulse, width: int) -> str:
    if p.kind is Kind.MEASURE:
        return "[M]"
    if p.kind is Kind.RESET:
        return "[R~]"
    return _FILL[p.kind] * width


def render(seq: PulseSequence) -> str:
    """Diagram text, one line per qubit."""
    n = seq.n_qubits
    labels = [f"q{q}" for q in range(1, n + 1)]
    pad = max((len(s) for s in labels), default=0)
    rows = [[lab.rjust(pad) + " " + WIRE] for lab in labels]
    for p in seq:
        width = symbol_width(p)
        covered = set(pulse_rows(p, n))
        body = _cell(p, width)
        for q in range(1, n + 1):
            rows[q - 1].append(body if q in covered else WIRE * width)
            rows[q - 1].append(GAP)
    return "\n".join("".join(r) for r in rows) + "\n"
