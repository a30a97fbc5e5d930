import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qecopt.gateset import Kind, M, Pulse, PulseSequence, R, X, XX, Y, subset_yy, z
from qecopt.seqfile import ParseError, format_angle, format_sequence, parse_angle, parse_sequence, read_sequence, write_sequence


class TestAngles:
    @pytest.mark.parametrize(
        "text,value",
        [
            ("pi", math.pi),
            ("-pi", -math.pi),
            ("1/2 pi", math.pi / 2),
            ("-1/2 pi", -math.pi / 2),
            ("3/4pi", 3 * math.pi / 4),
            ("2 pi", 2 * math.pi),
            ("3pi/4", 3 * math.pi / 4),
            ("-pi/8", -math.pi / 8),
            ("0.25", 0.25),
            ("-1e-3", -1e-3),
            ("0", 0.0),
        ],
    )
    def test_parse(self, text, value):
        assert parse_angle(text) == pytest.approx(value, abs=1e-15)

    @pytest.mark.parametrize("bad", ["nan", "inf", "pi/0", "half"])
    def test_parse_rejects(self, bad):
        with pytest.raises(ValueError):
            parse_angle(bad)

    @pytest.mark.parametrize(
        "value,text",
        [(math.pi, "pi"), (-math.pi / 2, "-1/2 pi"), (2 * math.pi, "2 pi"), (3 * math.pi / 4, "3/4 pi"), (0.0, "0"), (math.pi / 64, "1/64 pi")],
    )
    def test_format_rational(self, value, text):
        assert format_angle(value) == text

    def test_format_irrational_is_decimal(self):
        assert format_angle(0.3) == "0.3"
        assert format_angle(math.pi / 128 + 0) not in ("1/128 pi",)

    @settings(max_examples=200)
    @given(st.floats(-20, 20, allow_nan=False))
    def test_round_trip_decimal(self, theta):
        assert parse_angle(format_angle(theta)) == pytest.approx(theta, abs=1e-12)

    @settings(max_examples=200)
    @given(st.integers(-128, 128), st.integers(1, 64))
    def test_round_trip_rational(self, m, n):
        theta = m * math.pi / n
        assert abs(parse_angle(format_angle(theta)) - theta) <= 1e-12


class TestSequenceText:
    TEXT = "qubits 4\n# header comment\nY -1/2 pi\nz 4 -1/2 pi  # trailing\n\nX2 1/4 pi\nX[1,2,4] pi\nMSY2 1,3 1/8 pi\nM 4\nR 4\n"

    def test_parse(self):
        seq = parse_sequence(self.TEXT)
        assert seq.n_qubits == 4
        assert list(seq) == [
            Y(-math.pi / 2),
            z(4, -math.pi / 2),
            XX(math.pi / 4),
            Pulse(Kind.X, math.pi, (1, 2, 4)),
            subset_yy((1, 3), math.pi / 8),
            M(4),
            R(4),
        ]

    def test_round_trip(self):
        seq = parse_sequence(self.TEXT)
        assert parse_sequence(format_sequence(seq)) == seq

    def test_file_round_trip(self, tmp_path):
        seq = PulseSequence(3, [X(0.123456789), z(2, math.pi / 3), XX(-math.pi / 8), M(3)])
        write_sequence(seq, tmp_path / "s.txt")
        back = read_sequence(tmp_path / "s.txt")
        assert back == seq

    def test_empty_body(self):
        seq = parse_sequence("qubits 3\n")
        assert len(seq) == 0 and seq.n_qubits == 3

    @pytest.mark.parametrize(
        "text,line",
        [
            ("qubits 6\nX pi\nz 9 pi\n", 3),
            ("X pi\n", 1),
            ("qubits 2\n\n# c\nQ pi\n", 4),
            ("qubits 2\nX\n", 2),
            ("qubits 2\nM 1 2\n", 2),
            ("qubits 13\n", 1),
            ("qubits 3\nX[3,1] pi\n", 2),
        ],
    )
    def test_errors_carry_line(self, text, line):
        with pytest.raises(ParseError) as exc:
            parse_sequence(text)
        assert exc.value.line == line

    def test_missing_header(self):
        with pytest.raises(ParseError):
            parse_sequence("# nothing\n")

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(
            st.tuples(st.sampled_from(["X", "Y", "X2", "Y2", "z", "M"]), st.integers(1, 4), st.floats(-7, 7, allow_nan=False)),
            max_size=12,
        )
    )
    def test_round_trip_property(self, items):
        pulses = []
        for kind, q, theta in items:
            if kind == "z":
                pulses.append(z(q, theta))
            elif kind == "M":
                pulses.append(M(q))
            else:
                pulses.append(Pulse(Kind(kind), theta))
        seq = PulseSequence(4, pulses)
        back = parse_sequence(format_sequence(seq))
        assert len(back) == len(seq)
        for a, b in zip(seq, back):
            assert a.kind is b.kind and a.qubits == b.qubits
            if a.theta is not None:
                assert b.theta == pytest.approx(a.theta, abs=1e-12)
