"""Plain-text sequence files.

::

    qubits 4
    # comment
    Y -1/2 pi
    z 4 -pi/2
    X2 1/4 pi
    MSY2 1,3,5,7 pi/2
    X[1,2,3,5] 3/4 pi      # collective pulse restricted to a register
    M 4
    R 4

Angles are ``[-]m/n pi`` (also ``pi``, ``pi/4``, ``3pi/4``) or a decimal
radian literal. Writing uses an exact rational multiple of pi whenever one
with denominator at most 64 lies within 1e-12, else 17 significant digits.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from pathlib import Path

from .gateset import Kind, Pulse, PulseSequence, QubitIndexError

MAX_DENOMINATOR = 64
RATIONAL_TOL = 1e-12


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


_PI_FORMS = [
    re.compile(r"^(?P<sign>[+-]?)(?P<m>\d+)?/(?P<n>\d+)\s*pi$"),  # -1/2 pi, 3/4pi
    re.compile(r"^(?P<sign>[+-]?)(?P<m>\d+)?\s*\*?\s*pi\s*(?:/\s*(?P<n>\d+))?$"),  # pi, -pi/2, 3pi/4, 2 pi
]


def parse_angle(text: str) -> float:
    t = text.strip().lower()
    for rx in _PI_FORMS:
        m = rx.match(t)
        if m:
            num = int(m.group("m")) if m.group("m") else 1
            den = int(m.group("n")) if m.group("n") else 1
            if den == 0:
                raise ValueError("zero denominator")
            val = num * math.pi / den
            return -val if m.group("sign") == "-" else val
    val = float(t)
    if not math.isfinite(val):
        raise ValueError(f"non-finite angle {text!r}")
    return val


def format_angle(theta: float) -> str:
    frac = Fraction(theta / math.pi).limit_denominator(MAX_DENOMINATOR)
    if abs(float(frac) * math.pi - theta) <= RATIONAL_TOL:
        if frac == 0:
            return "0"
        sign = "-" if frac < 0 else ""
        frac = abs(frac)
        if frac.denominator == 1:
            return f"{sign}pi" if frac.numerator == 1 else f"{sign}{frac.numerator} pi"
        return f"{sign}{frac.numerator}/{frac.denominator} pi"
    return repr(float(f"{theta:.17g}"))


def _qubit_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(","))


def format_pulse(p: Pulse) -> str:
    if p.kind is Kind.Z:
        return f"z {p.target} {format_angle(p.theta)}"
    if p.kind in (Kind.MEASURE, Kind.RESET):
        return f"{p.kind.value} {p.target}"
    if p.kind is Kind.SUBSET_YY:
        return f"MSY2 {','.join(map(str, p.qubits))} {format_angle(p.theta)}"
    reg = f"[{','.join(map(str, p.qubits))}]" if p.qubits else ""
    return f"{p.kind.value}{reg} {format_angle(p.theta)}"


_COLLECTIVE = re.compile(r"^(X|Y|X2|Y2)(?:\[([\d,\s]+)\])?$")


def parse_pulse(line: str) -> Pulse:
    parts = line.split(None, 1)
    head = parts[0]
    rest = parts[1].strip() if len(parts) > 1 else ""
    m = _COLLECTIVE.match(head)
    if m:
        if not rest:
            raise ValueError(f"{head} needs an angle")
        reg = _qubit_list(m.group(2).replace(" ", "")) if m.group(2) else ()
        if reg and list(reg) != sorted(set(reg)):
            raise ValueError("register must be strictly increasing")
        return Pulse(Kind(m.group(1)), parse_angle(rest), reg)
    if head == "z":
        q, _, ang = rest.partition(" ")
        if not ang.strip():
            raise ValueError("z needs a qubit and an angle")
        return Pulse(Kind.Z, parse_angle(ang), (int(q),))
    if head == "MSY2":
        q, _, ang = rest.partition(" ")
        if not ang.strip():
            raise ValueError("MSY2 needs a qubit list and an angle")
        return Pulse(Kind.SUBSET_YY, parse_angle(ang), _qubit_list(q))
    if head in ("M", "R"):
        if not re.fullmatch(r"\d+", rest):
            raise ValueError(f"{head} takes exactly one qubit index")
        return Pulse(Kind(head), None, (int(rest),))
    raise ValueError(f"unknown operation {head!r}")


def parse_sequence(text: str) -> PulseSequence:
    """Parse sequence text; raises ``ParseError`` carrying the 1-based line number."""
    n_qubits = None
    pulses: list[Pulse] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if n_qubits is None:
            m = re.fullmatch(r"qubits\s+(\d+)", line)
            if not m:
                raise ParseError("expected header 'qubits N'", lineno)
            n_qubits = int(m.group(1))
            if not 1 <= n_qubits <= 12:
                raise ParseError(f"qubit count {n_qubits} outside 1..12", lineno)
            continue
        try:
            p = parse_pulse(line)
            p.check_qubits(n_qubits)
        except (ValueError, QubitIndexError) as exc:
            raise ParseError(str(exc), lineno) from None
        pulses.append(p)
    if n_qubits is None:
        raise ParseError("missing header 'qubits N'")
    return PulseSequence(n_qubits, pulses)


def format_sequence(seq: PulseSequence) -> str:
    lines = [f"qubits {seq.n_qubits}"]
    lines += [format_pulse(p) for p in seq]
    return "\n".join(lines) + "\n"


def read_sequence(path: str | Path) -> PulseSequence:
    return parse_sequence(Path(path).read_text())


def write_sequence(seq: PulseSequence, path: str | Path) -> None:
    Path(path).write_text(format_sequence(seq))
