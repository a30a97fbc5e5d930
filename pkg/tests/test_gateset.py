import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qecopt.gateset import (
    PAULI,
    Kind,
    M,
    NotUnitaryKindError,
    Pulse,
    PulseSequence,
    QubitIndexError,
    R,
    X,
    XX,
    Y,
    YY,
    apply_pulse,
    embed,
    hamiltonian,
    pulse_derivative,
    pulse_unitary,
    same_action,
    subset_yy,
    z,
)
from qecopt.tensor import basis_state, kron

SX, SY, SZ = PAULI["X"], PAULI["Y"], PAULI["Z"]
UNITARY_KINDS = [Kind.X, Kind.Y, Kind.XX, Kind.YY, Kind.Z, Kind.SUBSET_YY]


def taylor_exp(h, theta, terms=30):
    a = -1j * theta * h
    out = term = np.eye(h.shape[0], dtype=complex)
    for k in range(1, terms + 1):
        term = term @ a / k
        out = out + term
    return out


def make_pulse(kind, theta, n):
    if kind is Kind.Z:
        return z(n, theta)
    if kind is Kind.SUBSET_YY:
        return subset_yy(tuple(range(1, n + 1, 2)), theta)
    return Pulse(kind, theta)


class TestHamiltonian:
    def test_global_x_single_qubit(self):
        assert np.allclose(hamiltonian(Kind.X, 1), SX / 2)

    def test_ms_eigenvalues(self):
        # S_x on two qubits has eigenvalues 1, 0, 0, -1
        ev = np.linalg.eigvalsh(hamiltonian(Kind.XX, 2))
        assert np.allclose(sorted(ev), [0, 0, 1, 1])

    def test_local_z_on_second_qubit(self):
        assert np.allclose(hamiltonian(Kind.Z, 2, (2,)), np.diag([1, -1, 1, -1]) / 2)

    def test_subset_ms(self):
        s = (embed(SY, 1, 3) + embed(SY, 3, 3)) / 2
        assert np.allclose(hamiltonian(Kind.SUBSET_YY, 3, (1, 3)), s @ s)

    def test_register_restriction(self):
        s = (embed(SX, 1, 3) + embed(SX, 3, 3)) / 2
        assert np.allclose(hamiltonian(Kind.X, 3, (1, 3)), s)

    def test_measure_has_no_hamiltonian(self):
        with pytest.raises(NotUnitaryKindError):
            hamiltonian(Kind.MEASURE, 2, (1,))

    def test_qubit_bounds(self):
        with pytest.raises(QubitIndexError):
            hamiltonian(Kind.Z, 2, (3,))


class TestPulseUnitary:
    def test_x_pi(self):
        assert np.allclose(pulse_unitary(X(math.pi), 1), -1j * SX)

    def test_z_phase_on_zero(self):
        out = pulse_unitary(z(1, math.pi), 1) @ basis_state("0")
        assert np.allclose(out, np.exp(-1j * math.pi / 2) * basis_state("0"))

    def test_ms_matches_taylor(self):
        h = hamiltonian(Kind.XX, 2)
        assert np.max(np.abs(pulse_unitary(XX(math.pi / 2), 2) - taylor_exp(h, math.pi / 2))) < 1e-10

    @pytest.mark.parametrize("kind", UNITARY_KINDS)
    def test_structured_matches_dense_generator(self, kind):
        p = make_pulse(kind, 0.83, 3)
        h = hamiltonian(kind, 3, p.qubits)
        assert np.max(np.abs(pulse_unitary(p, 3) - taylor_exp(h, 0.83, 40))) < 1e-10

    def test_measure_rejected(self):
        with pytest.raises(NotUnitaryKindError):
            pulse_unitary(M(1), 1)

    @settings(max_examples=40, deadline=None)
    @given(st.sampled_from(UNITARY_KINDS), st.integers(1, 4), st.floats(-4 * math.pi, 4 * math.pi))
    def test_adjoint_is_negative_angle(self, kind, n, theta):
        u = pulse_unitary(make_pulse(kind, theta, n), n)
        assert np.max(np.abs(u.conj().T - pulse_unitary(make_pulse(kind, -theta, n), n))) < 1e-10

    @settings(max_examples=30, deadline=None)
    @given(st.sampled_from([Kind.X, Kind.Y]), st.integers(1, 4), st.floats(-2 * math.pi, 2 * math.pi))
    def test_global_rotation_factors(self, kind, n, theta):
        sigma = SX if kind is Kind.X else SY
        single = taylor_exp(sigma / 2, theta)
        assert np.max(np.abs(pulse_unitary(Pulse(kind, theta), n) - kron(*[single] * n))) < 1e-10

    def test_ms_does_not_factor(self):
        # operator Schmidt rank over the 1|2 cut: reshuffle to (a a', b b')
        u = pulse_unitary(XX(math.pi / 2), 2).reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
        sv = np.linalg.svd(u, compute_uv=False)
        assert np.sum(sv > 1e-8) > 1

    def test_block_application(self):
        rng = np.random.default_rng(0)
        block = rng.normal(size=(8, 5)) + 1j * rng.normal(size=(8, 5))
        p = YY(0.4)
        assert np.allclose(apply_pulse(p, 3, block), pulse_unitary(p, 3) @ block)


class TestPulseDerivative:
    def test_z_at_zero(self):
        assert np.allclose(pulse_derivative(z(1, 0.0), 1), -1j * SZ / 2)

    def test_ms_at_zero(self):
        assert np.allclose(pulse_derivative(XX(0.0), 3), -1j * hamiltonian(Kind.XX, 3))

    @pytest.mark.parametrize("kind", UNITARY_KINDS)
    def test_finite_difference(self, kind):
        rng = np.random.default_rng(7)
        theta, h = float(rng.uniform(-3, 3)), 1e-5
        p = make_pulse(kind, theta, 3)
        fd = (pulse_unitary(p.with_theta(theta + h), 3) - pulse_unitary(p.with_theta(theta - h), 3)) / (2 * h)
        assert np.max(np.abs(fd - pulse_derivative(p, 3))) < 1e-6

    def test_second_derivative(self):
        p = X(0.3)
        hmat = hamiltonian(Kind.X, 2)
        assert np.allclose(pulse_derivative(p, 2, 2), -hmat @ hmat @ pulse_unitary(p, 2))


class TestPulseModel:
    def test_measure_takes_no_angle(self):
        with pytest.raises(ValueError):
            Pulse(Kind.MEASURE, 1.0, (1,))

    def test_unitary_needs_finite_angle(self):
        with pytest.raises(ValueError):
            Pulse(Kind.X, float("nan"))

    def test_subset_must_increase(self):
        with pytest.raises(ValueError):
            subset_yy((3, 1), 0.1)

    def test_sequence_checks_qubits(self):
        with pytest.raises(QubitIndexError):
            PulseSequence(2, [z(3, 0.1)])

    def test_counts(self):
        seq = PulseSequence(2, [X(1.0), XX(0.5), z(1, 0.2), M(2), R(2)])
        assert (seq.unitary_count, seq.ms_count, seq.is_unitary_only) == (3, 1, False)

    def test_z_equal_modulo_period(self):
        # z(-pi/2) and z(3pi/2) differ by a global phase only
        assert same_action(z(1, -math.pi / 2), z(1, 3 * math.pi / 2), 2, up_to_phase=True)
        assert not same_action(z(1, -math.pi / 2), z(1, 3 * math.pi / 2), 2)
        assert same_action(z(1, 0.3), z(1, 0.3 + 4 * math.pi), 2)

    def test_fixed_flag_ignored_in_equality(self):
        assert Pulse(Kind.XX, 0.5, (), fixed=True) == XX(0.5)

    def test_sequence_unitary(self):
        seq = PulseSequence(1, [X(0.3), Y(0.2)])
        assert np.allclose(seq.unitary(), pulse_unitary(Y(0.2), 1) @ pulse_unitary(X(0.3), 1))
