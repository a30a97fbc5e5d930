import math

import numpy as np
import pytest

from qecopt import corpus
from qecopt.codes import NAMED_GATES, builtin_code
from qecopt.gateset import M, PulseSequence, R, X, XX, Y, z
from qecopt.tensor import basis_state, kron
from qecopt.verifier import (
    NonUnitarySequenceError,
    ResetOnEntangledQubitError,
    simulate,
    verify_coherent,
    verify_logical_gate,
    verify_state_prep,
    verify_syndrome,
)


def fixture(name):
    return next(f for f in corpus.regression_corpus() if f.name == name)


def bell():
    return (basis_state("00") + basis_state("11")) / math.sqrt(2)


class TestSimulate:
    def test_deterministic_measurement(self):
        (b,) = simulate(PulseSequence(2, [M(2)]), basis_state("01"))
        assert b.bits == "1" and b.weight == pytest.approx(1)

    def test_branches_and_weights(self):
        branches = simulate(PulseSequence(2, [M(1)]), bell())
        assert sorted(b.bits for b in branches) == ["0", "1"]
        assert [b.weight for b in branches] == pytest.approx([0.5, 0.5])
        # collapse: the partner qubit follows the outcome
        for b in branches:
            assert np.allclose(b.state / math.sqrt(b.weight), basis_state(b.bits * 2))

    def test_unitary_part_matches_product(self):
        seq = PulseSequence(2, [X(0.3), XX(0.7), z(2, 0.4)])
        psi = basis_state("11")
        (b,) = simulate(seq, psi)
        assert np.allclose(b.state, seq.unitary() @ psi)

    def test_reset_product_state(self):
        phi = np.array([0.6, 0.8j])
        (b,) = simulate(PulseSequence(2, [R(2)]), kron(phi, basis_state("0")))
        assert np.allclose(b.state, kron(phi, basis_state("1")))

    def test_reset_entangled(self):
        with pytest.raises(ResetOnEntangledQubitError):
            simulate(PulseSequence(2, [R(2)]), bell())

    def test_reset_after_measurement(self):
        branches = simulate(PulseSequence(2, [M(2), R(2)]), bell())
        assert len(branches) == 2
        for b in branches:
            assert np.allclose(b.state / math.sqrt(b.weight), kron(basis_state(b.bits), basis_state("1")))


class TestSyndromeVerifier:
    def test_bitflip_fixture(self):
        rep = fixture("three_bitflip_syndrome").verify()
        assert rep.passed and rep.worst_fidelity == pytest.approx(1)
        assert rep.outcome_map == {"I": "11", "X1": "10", "X2": "01", "X3": "00"}

    def test_identity_is_not_injective(self):
        seq = PulseSequence(4, [M(4)])
        rep = verify_syndrome(seq, builtin_code("three_bitflip"))
        assert not rep.passed and rep.messages
        assert set(rep.outcome_map.values()) == {"1"}

    def test_disturbing_measurement(self):
        # rotating a code qubit before readout leaves E|l> wrong
        seq = PulseSequence(4, [X(math.pi / 2), M(4)])
        rep = verify_syndrome(seq, builtin_code("three_bitflip"), errors=[builtin_code("three_bitflip").error("I")])
        assert not rep.passed

    def test_stabilizer_outcome_pattern(self):
        rep = fixture("five_stabilizer_2").verify()
        assert rep.passed
        five = builtin_code("five_qubit")
        from qecopt.codes import syndrome_bits

        for e in five.errors:
            assert rep.outcome_map[e.label] == syndrome_bits(five, e, [2])

    def test_wrong_stabilizer(self):
        seq = fixture("five_stabilizer_1").sequence
        assert not verify_syndrome(seq, builtin_code("five_qubit"), stabilizers=[2]).passed

    def test_records_format(self):
        text = fixture("five_stabilizer_1").verify().records()
        groups = text.strip().split("\n\n")
        assert groups[0].splitlines()[:2] == ["contract=stabilizer", "pass=true"]
        assert len(groups) == 1 + 16
        assert all("=" in line for g in groups for line in g.splitlines())


class TestCoherentVerifier:
    def test_fixture(self):
        assert fixture("three_bitflip_coherent").verify().passed

    @pytest.mark.parametrize("drop", [0, 1, 5, 16])
    def test_ablation(self, drop):
        seq = fixture("three_bitflip_coherent").sequence
        pulses = list(seq)
        assert pulses[drop].kind.is_unitary
        del pulses[drop]
        code = builtin_code("three_bitflip")
        try:
            rep = verify_coherent(PulseSequence(4, pulses), code)
            assert not rep.passed
        except ResetOnEntangledQubitError:
            pass

    def test_no_correction(self):
        rep = verify_coherent(PulseSequence(4, []), builtin_code("three_bitflip"))
        assert not rep.passed
        assert {r.label for r in rep.results if r.ok} == {"I"}


class TestStatePrepVerifier:
    def test_flip(self):
        rep = verify_state_prep(PulseSequence(3, [X(math.pi)]), basis_state("000"))
        assert rep.passed

    def test_wrong_target(self):
        rep = verify_state_prep(PulseSequence(3, [Y(math.pi / 2)]), basis_state("000"))
        assert not rep.passed and rep.worst_fidelity == pytest.approx(1 / 8)

    def test_random_measurement_fails(self):
        rep = verify_state_prep(PulseSequence(1, [X(math.pi / 2), M(1)]), basis_state("0"))
        assert not rep.passed


class TestLogicalGateVerifier:
    def test_transversal_x(self):
        rep = verify_logical_gate(PulseSequence(5, [X(math.pi)]), builtin_code("five_qubit"), NAMED_GATES["X"])
        assert rep.passed

    def test_wrong_gate(self):
        rep = verify_logical_gate(PulseSequence(5, [X(math.pi)]), builtin_code("five_qubit"), NAMED_GATES["Z"])
        assert not rep.passed

    def test_requires_unitary(self):
        with pytest.raises(NonUnitarySequenceError):
            verify_logical_gate(PulseSequence(5, [M(1)]), builtin_code("five_qubit"), NAMED_GATES["X"])

    def test_hadamard_fixture(self):
        assert fixture("five_hadamard").verify().passed
