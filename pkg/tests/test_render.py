import math

import pytest

from qecopt import corpus
from qecopt.gateset import M, Pulse, PulseSequence, R, X, XX, Y, subset_yy, z
from qecopt.render import CELLS_PER_PI, display_angle, render, symbol_width


def rows(seq):
    return render(seq).splitlines()


class TestWidths:
    def test_proportional(self):
        assert symbol_width(X(math.pi)) == CELLS_PER_PI
        assert symbol_width(XX(math.pi / 4)) == CELLS_PER_PI // 4
        assert symbol_width(X(-math.pi / 2)) == CELLS_PER_PI // 2

    def test_minimum_one_cell(self):
        assert symbol_width(X(1e-6)) == 1

    def test_negative_z_drawn_positive(self):
        assert display_angle(z(1, -math.pi / 2)) == pytest.approx(3 * math.pi / 2)
        assert symbol_width(z(1, -math.pi / 2)) == symbol_width(z(1, 3 * math.pi / 2)) == 12

    def test_non_unitary(self):
        assert symbol_width(M(1)) == 3 and symbol_width(R(1)) == 4


class TestDiagram:
    def test_z_only_on_its_row(self):
        lines = rows(PulseSequence(3, [z(2, math.pi)]))
        assert len(lines) == 3
        assert "z" * 8 in lines[1]
        assert "z" not in lines[0] and "z" not in lines[2]

    def test_ms_spans_all_rows(self):
        lines = rows(PulseSequence(5, [XX(math.pi / 4)]))
        assert all("##" in line and "###" not in line for line in lines)

    def test_rows_aligned(self):
        seq = corpus.regression_corpus()[0].sequence
        lines = rows(seq)
        assert len({len(line) for line in lines}) == 1

    def test_width_ratio(self):
        short = rows(PulseSequence(2, [XX(math.pi / 4)]))[0]
        long = rows(PulseSequence(2, [XX(math.pi)]))[0]
        assert long.count("#") == 4 * short.count("#")

    def test_register_and_subset(self):
        lines = rows(PulseSequence(4, [Pulse(X(1.0).kind, math.pi, (1, 2, 4)), subset_yy((1, 3), math.pi / 2)]))
        assert "X" in lines[0] and "X" not in lines[2] and "X" in lines[3]
        assert "%" in lines[0] and "%" in lines[2] and "%" not in lines[1]

    def test_measure_and_reset_cells(self):
        lines = rows(PulseSequence(2, [Y(math.pi / 2), M(2), R(2)]))
        assert "[M]" in lines[1] and "[R~]" in lines[1]
        assert "[" not in lines[0]

    def test_labels(self):
        lines = rows(PulseSequence(10, []))
        assert lines[0].startswith(" q1 ") and lines[9].startswith("q10 ")
