import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qecopt import corpus
from qecopt.codes import builtin_code, fixed_unitary_objective, state_prep_objective, syndrome_objective
from qecopt.gateset import Kind, M, Pulse, PulseSequence, X, XX, Y, YY, z
from qecopt.layout import unroll
from qecopt.objective import (
    EvalContext,
    IndexOutOfRangeError,
    MeasurementInUnitarySegmentError,
    OpCounter,
    StaleCacheError,
    evaluate,
    finite_difference_gradient,
    gradient,
    importance,
    local_quadratic,
    naive_gradient,
)
from qecopt.tensor import DimensionMismatchError, basis_state

BITFLIP_MAP = {"I": "11", "X1": "10", "X2": "01", "X3": "00"}


def random_unitary(dim, rng):
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_sequence(n, length, rng):
    pulses = []
    for _ in range(length):
        kind = rng.choice(["X", "Y", "z", "X2", "Y2"])
        theta = float(rng.uniform(-math.pi, math.pi))
        pulses.append(z(int(rng.integers(1, n + 1)), theta) if kind == "z" else Pulse(Kind(kind), theta))
    return PulseSequence(n, pulses)


def product(seq):
    u = np.eye(1 << seq.n_qubits, dtype=complex)
    for p in seq:
        from qecopt.gateset import pulse_unitary

        u = pulse_unitary(p, seq.n_qubits) @ u
    return u


def expm_x(a):
    c, s_ = math.cos(a / 2), math.sin(a / 2)
    return np.array([[c, -1j * s_], [-1j * s_, c]])


def bitflip():
    fx = next(f for f in corpus.regression_corpus() if f.name == "three_bitflip_syndrome")
    return syndrome_objective(builtin_code("three_bitflip"), BITFLIP_MAP, n_aux=2), unroll(fx.sequence, 3)


class TestEvaluate:
    def test_closed_form_single_x(self):
        # Re tr exp(-i theta sigma_x / 2) = 2 cos(theta / 2)
        obj = fixed_unitary_objective(np.eye(2), "re")
        for theta in np.linspace(-3, 3, 7):
            assert evaluate(obj, PulseSequence(1, [X(theta)])) == pytest.approx(2 * math.cos(theta / 2), abs=1e-12)

    def test_closed_form_derivatives(self):
        obj = fixed_unitary_objective(np.eye(2), "re")
        theta = 0.9
        ctx = EvalContext(obj, PulseSequence(1, [X(theta)]))
        v, d1, d2 = local_quadratic(ctx, 0)
        assert (v, d1, d2) == pytest.approx((2 * math.cos(theta / 2), -math.sin(theta / 2), -0.5 * math.cos(theta / 2)), abs=1e-12)

    def test_matches_explicit_product(self):
        rng = np.random.default_rng(2)
        seq = random_sequence(3, 12, rng)
        target = random_unitary(8, rng)
        obj = fixed_unitary_objective(target, "abs")
        expected = abs(np.trace(target.conj().T @ product(seq))) ** 2 / 64
        assert evaluate(obj, seq) == pytest.approx(expected, abs=1e-12)

    def test_corpus_syndrome_is_maximal(self):
        obj, seq = bitflip()
        assert evaluate(obj, seq) == pytest.approx(4, abs=1e-10)

    def test_rejects_measurement(self):
        obj = state_prep_objective(basis_state("00"), basis_state("11"))
        with pytest.raises(MeasurementInUnitarySegmentError):
            evaluate(obj, PulseSequence(2, [X(1.0), M(2)]))

    def test_rejects_width(self):
        obj = state_prep_objective(basis_state("00"), basis_state("11"))
        with pytest.raises(DimensionMismatchError):
            evaluate(obj, PulseSequence(3, [X(1.0)]))

    def test_empty_sequence(self):
        obj = state_prep_objective(basis_state("01"), basis_state("01"))
        assert evaluate(obj, PulseSequence(2, [])) == pytest.approx(1)


class TestCachedContext:
    def test_split_invariance(self):
        obj, seq = bitflip()
        v = evaluate(obj, seq)
        ctx = EvalContext(obj, seq)
        for k in range(len(seq)):
            lm = ctx.local_model(k)
            assert lm.value(lm.theta) == pytest.approx(v, abs=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 14), st.floats(-4, 4))
    def test_local_model_is_exact(self, seed, length, theta):
        rng = np.random.default_rng(seed)
        seq = random_sequence(3, length, rng)
        obj = fixed_unitary_objective(random_unitary(8, rng), "abs")
        k = int(rng.integers(0, length))
        moved = seq.copy()
        moved.pulses[k] = seq[k].with_theta(theta)
        assert EvalContext(obj, seq).local_model(k).value(theta) == pytest.approx(evaluate(obj, moved), abs=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 12))
    def test_gradient_matches_finite_difference(self, seed, length):
        rng = np.random.default_rng(seed)
        seq = random_sequence(3, length, rng)
        obj = fixed_unitary_objective(random_unitary(8, rng), "re")
        g = gradient(EvalContext(obj, seq))
        assert np.max(np.abs(g - finite_difference_gradient(obj, seq))) < 1e-6

    def test_naive_and_cached_agree(self):
        obj, seq = bitflip()
        rng = np.random.default_rng(0)
        seq = PulseSequence(seq.n_qubits, [p.with_theta(p.theta + rng.normal(0, 0.1)) for p in seq])
        assert np.allclose(gradient(EvalContext(obj, seq)), naive_gradient(obj, seq), atol=1e-12)

    def test_operation_count_ratio(self):
        rng = np.random.default_rng(5)
        seq = random_sequence(3, 32, rng)
        obj = fixed_unitary_objective(random_unitary(8, rng), "abs")
        ctx = EvalContext(obj, seq)
        gradient(ctx)
        counter = OpCounter()
        naive_gradient(obj, seq, counter)
        assert ctx.ops / counter.count < 0.2

    def test_set_angle_consistency(self):
        obj, seq = bitflip()
        ctx = EvalContext(obj, seq)
        ctx.set_angle(3, 0.4)
        moved = seq.copy()
        moved.pulses[3] = seq[3].with_theta(0.4)
        assert ctx.value() == pytest.approx(evaluate(obj, moved), abs=1e-12)
        # later pulses still see consistent caches
        assert ctx.local_model(7).value(seq[7].theta) == pytest.approx(evaluate(obj, moved), abs=1e-12)

    def test_stale_suffix(self):
        obj, seq = bitflip()
        ctx = EvalContext(obj, seq)
        ctx.set_angle(6, 0.1)
        with pytest.raises(StaleCacheError):
            ctx.local_model(2)
        with pytest.raises(StaleCacheError):
            gradient(ctx)
        ctx.refresh()
        ctx.local_model(2)

    def test_index_range(self):
        obj, seq = bitflip()
        ctx = EvalContext(obj, seq)
        with pytest.raises(IndexOutOfRangeError):
            ctx.local_model(len(seq))
        with pytest.raises(IndexOutOfRangeError):
            ctx.set_angle(-1, 0.0)

    def test_delete_and_insert(self):
        obj, seq = bitflip()
        ctx = EvalContext(obj, seq)
        removed = ctx.delete(4)
        shorter = PulseSequence(seq.n_qubits, [p for i, p in enumerate(seq) if i != 4])
        assert ctx.value() == pytest.approx(evaluate(obj, shorter), abs=1e-12)
        ctx.insert(4, removed)
        assert ctx.value() == pytest.approx(4, abs=1e-10)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000), st.lists(st.tuples(st.booleans(), st.floats(0, 1), st.floats(-3, 3)), min_size=1, max_size=10))
    def test_random_edits_keep_value_consistent(self, seed, edits):
        # sweep-style edits (left to right, no refresh) must keep value() exact
        rng = np.random.default_rng(seed)
        seq = random_sequence(3, 10, rng)
        obj = fixed_unitary_objective(random_unitary(8, rng), "abs")
        ctx = EvalContext(obj, seq)
        pulses = list(seq)
        k = 0
        for delete, pos, theta in edits:
            if k >= len(pulses):
                break
            k = min(len(pulses) - 1, k + int(pos * 3))
            if delete:
                ctx.delete(k)
                pulses.pop(k)
            else:
                ctx.set_angle(k, theta)
                pulses[k] = pulses[k].with_theta(theta)
                k += 1
            assert ctx.value() == pytest.approx(evaluate(obj, PulseSequence(3, pulses)), abs=1e-12)

    def test_delete_last_pulse(self):
        obj, seq = bitflip()
        ctx = EvalContext(obj, seq)
        ctx.set_angle(0, seq[0].theta)
        ctx.delete(len(seq) - 1)
        assert ctx.value() == pytest.approx(evaluate(obj, PulseSequence(seq.n_qubits, list(seq)[:-1])), abs=1e-12)

    def test_insert_rejects_measurement(self):
        obj, seq = bitflip()
        with pytest.raises(MeasurementInUnitarySegmentError):
            EvalContext(obj, seq).insert(0, M(5))


class TestImportance:
    def test_zero_angle_is_unimportant(self):
        rng = np.random.default_rng(1)
        seq = random_sequence(2, 6, rng)
        seq.pulses[2] = seq[2].with_theta(0.0)
        obj = fixed_unitary_objective(random_unitary(4, rng), "abs")
        assert importance(EvalContext(obj, seq), 2) == pytest.approx(0, abs=1e-14)

    def test_equals_value_drop_on_deletion(self):
        obj, seq = bitflip()
        ctx = EvalContext(obj, seq)
        for k in range(len(seq)):
            shorter = PulseSequence(seq.n_qubits, [p for i, p in enumerate(seq) if i != k])
            assert importance(ctx, k) == pytest.approx(4 - evaluate(obj, shorter), abs=1e-10)

    def test_corpus_z_pulse_is_important(self):
        obj, seq = bitflip()
        k = next(i for i, p in enumerate(seq) if p.kind is Kind.Z and p.target == 2 and p.theta == pytest.approx(math.pi))
        assert importance(EvalContext(obj, seq), k) > 0.1

    def test_ms_pulses_matter(self):
        obj, seq = bitflip()
        ctx = EvalContext(obj, seq)
        ms = [k for k, p in enumerate(seq) if p.kind is Kind.XX]
        assert len(ms) == 4 and all(importance(ctx, k) > 0.1 for k in ms)


class TestLocalModel:
    @settings(max_examples=40, deadline=None)
    @given(st.floats(-math.pi, math.pi), st.floats(-0.5, 0.5))
    def test_parabola_vertex_near_cosine_maximum(self, a, offset):
        obj = fixed_unitary_objective(expm_x(a), "re")
        ctx = EvalContext(obj, PulseSequence(1, [X(a + offset)]))
        v, d1, d2 = local_quadratic(ctx, 0)
        assert d2 < 0 and abs((a + offset - d1 / d2) - a) < 0.2

    def test_curvature_negative_at_maxima(self):
        obj, seq = bitflip()
        ctx = EvalContext(obj, seq)
        for k in range(len(seq)):
            v, d1, d2 = local_quadratic(ctx, k)
            assert abs(d1) < 1e-9 and d2 <= 1e-9

    def test_importance_invariant_under_neighbor_split(self):
        obj, seq = bitflip()
        k = 3
        split = list(seq)
        half = split[k + 1].with_theta(split[k + 1].theta / 2)
        split[k + 1 : k + 2] = [half, half]
        assert importance(EvalContext(obj, seq), k) == pytest.approx(
            importance(EvalContext(obj, PulseSequence(seq.n_qubits, split)), k), abs=1e-12
        )

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 5), st.integers(0, 40))
    def test_cached_matches_naive_product(self, seed, n, length):
        rng = np.random.default_rng(seed)
        seq = random_sequence(n, length, rng)
        target = random_unitary(2**n, rng)
        obj = fixed_unitary_objective(target, "abs")
        ctx = EvalContext(obj, seq)
        expected = abs(np.trace(target.conj().T @ product(seq))) ** 2 / 4**n
        assert ctx.value() == pytest.approx(expected, abs=1e-10)
        if length:
            lm = ctx.local_model(length // 2)
            assert lm.value(lm.theta) == pytest.approx(expected, abs=1e-10)


class TestGaugeInvariance:
    @settings(max_examples=20, deadline=None)
    @given(st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi))
    def test_aux_z_before_measurement(self, a, b):
        # z on an aux qubit right before readout only changes outcome phases
        obj, seq = bitflip()
        tail = PulseSequence(seq.n_qubits, list(seq) + [z(4, a), z(5, b)])
        assert evaluate(obj, tail) == pytest.approx(4, abs=1e-10)

    def test_global_pulse_commutes_in_value(self):
        obj = fixed_unitary_objective(np.eye(4), "abs")
        seq = PulseSequence(2, [XX(0.3), YY(0.2), Y(0.1)])
        assert 0 <= evaluate(obj, seq) <= 1 + 1e-12
