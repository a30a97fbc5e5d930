"""Swap-trick unrolling of mid-sequence measurements.

A physical sequence on ``n_code + 1`` qubits that reuses one auxiliary qubit
(``... M a R a ...``, or a bare ``R a`` for measurement-free correction) is
equivalent to a unitary sequence on ``n_code + n_segments`` qubits in which
segment ``s`` talks to its own fresh auxiliary qubit ``n_code + s``. All
measurements then happen at the end, so the unitary objectives apply.

Collective pulses in an unrolled sequence carry an explicit register
``(1, ..., n_code, n_code + s)``.
"""

from __future__ import annotations

from .gateset import Kind, Pulse, PulseSequence


class LayoutError(ValueError):
    pass


def segment_register(n_code: int, segment: int) -> tuple[int, ...]:
    """Register of segment ``segment`` (0-based) in the unrolled layout."""
    return tuple(range(1, n_code + 1)) + (n_code + 1 + segment,)


def _relabel(p: Pulse, n_code: int, aux: int) -> Pulse:
    if p.kind is Kind.Z:
        return Pulse(Kind.Z, p.theta, (aux,)) if p.target > n_code else p
    if p.kind is Kind.SUBSET_YY:
        return Pulse(Kind.SUBSET_YY, p.theta, tuple(aux if q > n_code else q for q in p.qubits), p.fixed)
    return Pulse(p.kind, p.theta, tuple(range(1, n_code + 1)) + (aux,), p.fixed)


def unroll(seq: PulseSequence, n_code: int) -> PulseSequence:
    """Replace ``M a R a`` / ``R a`` boundaries by fresh auxiliary qubits.

    The trailing measurement (or reset) is dropped. A single segment is
    returned with unrestricted collective pulses.
    """
    if seq.n_qubits != n_code + 1:
        raise LayoutError(f"expected {n_code + 1} qubits (one auxiliary), got {seq.n_qubits}")
    aux = n_code + 1
    segments: list[list[Pulse]] = [[]]
    pulses = list(seq)
    i = 0
    while i < len(pulses):
        p = pulses[i]
        if p.kind.is_unitary:
            if p.qubits and p.kind.is_global:
                raise LayoutError("collective pulses in a physical sequence must act on all qubits")
            segments[-1].append(p)
            i += 1
            continue
        if p.target != aux:
            raise LayoutError(f"measurement/reset on code qubit {p.target}")
        rest = pulses[i + 1:]
        if p.kind is Kind.MEASURE:
            if not rest:
                break
            if rest[0].kind is Kind.RESET and rest[0].target == aux:
                i += 2
                if i < len(pulses):
                    segments.append([])
                continue
            raise LayoutError("a measurement must be followed by a reset or end the sequence")
        # bare reset
        i += 1
        if i < len(pulses):
            segments.append([])
    if len(segments) == 1:
        return PulseSequence(n_code + 1, segments[0])
    out = []
    for s, seg in enumerate(segments):
        out += [_relabel(p, n_code, n_code + 1 + s) for p in seg]
    return PulseSequence(n_code + len(segments), out)


def segment_of(p: Pulse, n_code: int) -> int | None:
    """Segment index of a pulse in an unrolled sequence, ``None`` for code-only z."""
    if p.kind is Kind.Z:
        return p.target - n_code - 1 if p.target > n_code else None
    if p.qubits:
        auxes = [q for q in p.qubits if q > n_code]
        if len(auxes) > 1:
            raise LayoutError(f"{p} touches several auxiliary qubits")
        return auxes[0] - n_code - 1 if auxes else None
    return 0


def reroll(seq: PulseSequence, n_code: int, coherent: bool = False, final: bool = True) -> PulseSequence:
    """Inverse of :func:`unroll`: fold segments back onto one auxiliary qubit.

    Boundaries become ``M a R a`` (or ``R a`` when ``coherent``); ``final``
    appends the closing ``M a`` (``R a``).
    """
    aux = n_code + 1
    n_seg = seq.n_qubits - n_code
    out: list[Pulse] = []
    current = 0
    for p in seq:
        s = segment_of(p, n_code) if n_seg > 1 else 0
        if s is not None:
            if s < current:
                raise LayoutError("segments are out of order")
            while current < s:
                out += [Pulse(Kind.RESET, None, (aux,))] if coherent else [Pulse(Kind.MEASURE, None, (aux,)), Pulse(Kind.RESET, None, (aux,))]
                current += 1
        if n_seg > 1:
            if p.kind is Kind.Z:
                p = Pulse(Kind.Z, p.theta, (aux,)) if p.target > n_code else p
            elif p.kind is Kind.SUBSET_YY:
                p = Pulse(Kind.SUBSET_YY, p.theta, tuple(aux if q > n_code else q for q in p.qubits), p.fixed)
            else:
                p = Pulse(p.kind, p.theta, (), p.fixed)
        out.append(p)
    while current < n_seg - 1:
        out += [Pulse(Kind.RESET, None, (aux,))] if coherent else [Pulse(Kind.MEASURE, None, (aux,)), Pulse(Kind.RESET, None, (aux,))]
        current += 1
    if final:
        out.append(Pulse(Kind.RESET if coherent else Kind.MEASURE, None, (aux,)))
    return PulseSequence(n_code + 1, out)
