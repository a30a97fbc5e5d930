"""Evaluation of performance functions, derivatives and pulse importance.

With ``U = u_{T-1} ... u_0`` every bracket is read off the small matrix
``F^H U I``. Caching ``fwd[k] = u_{k-1} ... u_0 I`` and
``back[k] = u_k^+ ... u_{T-1}^+ F`` gives, for any single pulse ``k``,

    F^H U I = back[k+1]^H u_k(theta) fwd[k].

Because every generator is diagonal in a product basis, ``u_k(theta)``
splits over the distinct generator eigenvalues ``lam`` and the bracket
vector becomes an exact trigonometric polynomial
``b(theta) = sum_lam beta_lam exp(-i theta lam)``. Value, first and second
derivative, line searches and the deleted-pulse value (``theta = 0``) all
come from the same coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codes import Objective
from .gateset import Pulse, PulseSequence, apply_pulse, apply_pulse_adjoint, diagonal_form, to_eigenbasis
from .tensor import DimensionMismatchError


class MeasurementInUnitarySegmentError(ValueError):
    pass


class StaleCacheError(RuntimeError):
    pass


class IndexOutOfRangeError(IndexError):
    pass


def _check(objective: Objective, seq: PulseSequence) -> None:
    if seq.n_qubits != objective.n_qubits:
        raise DimensionMismatchError(f"sequence has {seq.n_qubits} qubits, objective {objective.n_qubits}")
    for t, p in enumerate(seq):
        if not p.kind.is_unitary:
            raise MeasurementInUnitarySegmentError(f"pulse {t} is {p.kind.value}; unroll measurements first")


def evaluate_unitary(objective: Objective, u: np.ndarray) -> float:
    """Performance value of an explicit matrix ``U``."""
    m = objective.outputs.conj().T @ (u @ objective.inputs)
    return objective.combine(objective.brackets(m))


def evaluate(objective: Objective, seq: PulseSequence) -> float:
    """Performance value of a unitary-only sequence."""
    _check(objective, seq)
    block = objective.inputs
    for p in seq:
        block = apply_pulse(p, seq.n_qubits, block)
    return objective.combine(objective.brackets(objective.outputs.conj().T @ block))


@dataclass
class LocalModel:
    """Exact dependence of the objective on one pulse angle."""

    objective: Objective
    levels: np.ndarray
    beta: np.ndarray  # (n_levels, n_brackets)
    theta: float

    def brackets(self, theta: float, order: int = 0) -> np.ndarray:
        ph = np.exp(-1j * theta * self.levels)
        if order:
            ph = ph * (-1j * self.levels) ** order
        return ph @ self.beta

    def value(self, theta: float) -> float:
        return self.objective.combine(self.brackets(theta))

    def derivatives(self, theta: float) -> tuple[float, float, float]:
        return self.objective.combine(self.brackets(theta), self.brackets(theta, 1), self.brackets(theta, 2))

    def values(self, thetas: np.ndarray) -> np.ndarray:
        return np.array([self.value(t) for t in np.atleast_1d(thetas)])


class EvalContext:
    """Prefix/suffix caches for one (objective, sequence) pair.

    ``fwd`` entries ``0..fwd_valid`` and ``back`` entries ``back_valid..T``
    are consistent with the current angles. Forward entries are extended
    lazily; backward entries need :meth:`refresh`.
    """

    def __init__(self, objective: Objective, seq: PulseSequence):
        _check(objective, seq)
        self.objective = objective
        self.n = seq.n_qubits
        self.pulses: list[Pulse] = list(seq)
        self.ops = 0
        self.refresh()

    # -- cache management ------------------------------------------------------

    def refresh(self) -> None:
        t = len(self.pulses)
        self.fwd: list[np.ndarray | None] = [None] * (t + 1)
        self.fwd[0] = self.objective.inputs
        self.fwd_valid = 0
        self.back: list[np.ndarray | None] = [None] * (t + 1)
        self.back[t] = self.objective.outputs
        for k in range(t - 1, -1, -1):
            self.back[k] = apply_pulse_adjoint(self.pulses[k], self.n, self.back[k + 1])
            self.ops += 1
        self.back_valid = 0

    def _ensure_fwd(self, k: int) -> None:
        while self.fwd_valid < k:
            j = self.fwd_valid
            self.fwd[j + 1] = apply_pulse(self.pulses[j], self.n, self.fwd[j])
            self.ops += 1
            self.fwd_valid = j + 1

    @property
    def sequence(self) -> PulseSequence:
        return PulseSequence(self.n, list(self.pulses))

    def __len__(self) -> int:
        return len(self.pulses)

    @property
    def is_fresh(self) -> bool:
        return self.back_valid == 0

    def _index(self, k: int) -> None:
        if not 0 <= k < len(self.pulses):
            raise IndexOutOfRangeError(f"pulse index {k} outside 0..{len(self.pulses) - 1}")

    # -- queries ---------------------------------------------------------------

    def value(self) -> float:
        """Current value from a consistent split point."""
        t = len(self.pulses)
        j = max(self.back_valid, 0)
        if j > t:
            raise StaleCacheError("no consistent split point")
        self._ensure_fwd(j)
        m = self.back[j].conj().T @ self.fwd[j]
        return self.objective.combine(self.objective.brackets(m))

    def local_model(self, k: int) -> LocalModel:
        self._index(k)
        if k + 1 < self.back_valid:
            raise StaleCacheError(f"suffix cache for pulse {k} is stale; call refresh()")
        self._ensure_fwd(k)
        p = self.pulses[k]
        form = diagonal_form(p, self.n)
        bk = to_eigenbasis(form, self.back[k + 1], self.n)
        fk = to_eigenbasis(form, self.fwd[k], self.n)
        self.ops += 1
        obj = self.objective
        beta = np.empty((len(form.levels), obj.n_brackets), dtype=complex)
        for a, mask in enumerate(form.masks):
            beta[a] = obj.brackets(bk[mask].conj().T @ fk[mask])
        return LocalModel(obj, np.array(form.levels), beta, p.theta)

    def local_quadratic(self, k: int) -> tuple[float, float, float]:
        """``(phi_k, phi_k', phi_k'')`` at the current angle of pulse ``k``."""
        lm = self.local_model(k)
        return lm.derivatives(lm.theta)

    def importance(self, k: int) -> float:
        """Value with pulse ``k`` minus value with pulse ``k`` deleted."""
        lm = self.local_model(k)
        return lm.value(lm.theta) - lm.value(0.0)

    # -- updates ---------------------------------------------------------------

    def set_angle(self, k: int, theta: float) -> None:
        self._index(k)
        self.pulses[k] = self.pulses[k].with_theta(theta)
        self.fwd_valid = min(self.fwd_valid, k)
        self.back_valid = max(self.back_valid, k + 1)

    def delete(self, k: int) -> Pulse:
        self._index(k)
        p = self.pulses.pop(k)
        del self.fwd[k + 1]
        self.fwd_valid = min(self.fwd_valid, k)
        del self.back[k]
        # suffix entries 0..k-1 still contain the removed pulse
        self.back_valid = max(k, self.back_valid - 1 if self.back_valid > k else self.back_valid)
        return p

    def insert(self, k: int, p: Pulse) -> None:
        p.check_qubits(self.n)
        if not p.kind.is_unitary:
            raise MeasurementInUnitarySegmentError(f"{p.kind.value} cannot enter a unitary segment")
        self.pulses.insert(k, p)
        self.refresh()


def gradient(ctx: EvalContext) -> np.ndarray:
    """Exact ``dPhi/dtheta_k`` for every pulse; needs fresh caches."""
    if not ctx.is_fresh:
        raise StaleCacheError("gradient needs fresh caches; call refresh()")
    g = np.empty(len(ctx))
    for k in range(len(ctx)):
        g[k] = ctx.local_quadratic(k)[1]
    return g


def local_quadratic(ctx: EvalContext, k: int) -> tuple[float, float, float]:
    return ctx.local_quadratic(k)


def importance(ctx: EvalContext, k: int) -> float:
    return ctx.importance(k)


# ---------------------------------------------------------------------------
# reference implementations without caching


@dataclass
class OpCounter:
    count: int = 0


def naive_gradient(objective: Objective, seq: PulseSequence, counter: OpCounter | None = None) -> np.ndarray:
    """Gradient by re-multiplying the full product for each pulse (quadratic cost)."""
    _check(objective, seq)
    counter = counter if counter is not None else OpCounter()
    pulses = list(seq)
    n = seq.n_qubits
    f_h = objective.outputs.conj().T
    g = np.empty(len(pulses))
    for k in range(len(pulses)):
        block, dblock = objective.inputs, None
        for t, p in enumerate(pulses):
            if t == k:
                dblock = apply_pulse(p, n, block, order=1)
                block = apply_pulse(p, n, block)
                counter.count += 2
            else:
                block = apply_pulse(p, n, block)
                counter.count += 1
                if dblock is not None:
                    dblock = apply_pulse(p, n, dblock)
                    counter.count += 1
        b = objective.brackets(f_h @ block)
        db = objective.brackets(f_h @ dblock)
        g[k] = objective.combine(b, db)[1]
    return g


def finite_difference_gradient(objective: Objective, seq: PulseSequence, h: float = 1e-5) -> np.ndarray:
    g = np.empty(len(seq))
    for k, p in enumerate(seq):
        plus, minus = seq.copy(), seq.copy()
        plus.pulses[k] = p.with_theta(p.theta + h)
        minus.pulses[k] = p.with_theta(p.theta - h)
        g[k] = (evaluate(objective, plus) - evaluate(objective, minus)) / (2 * h)
    return g
