import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bbcc.circuit import (
    Angle,
    AngleClass,
    CircuitParseError,
    OpKind,
    PbcCircuit,
    PbcOp,
    gen_random,
    parse_circuit,
    render_circuit,
)
from bbcc.pauli import SignedPauli


def test_parse_tlike_rotation():
    c = parse_circuit("qubits 2\nrot +XZ pi/8\n")
    assert c.n_qubits == 2 and c.L == 1
    op = c.ops[0]
    assert op.kind is OpKind.ROTATION
    assert op.angle_class() is AngleClass.TLIKE
    assert op.pauli == SignedPauli.from_string("+XZ")


def test_parse_identity_rejected():
    with pytest.raises(CircuitParseError, match="identity Pauli"):
        parse_circuit("qubits 2\nrot +II pi/8\n")


def test_parse_decimal_angle_is_arbitrary():
    c = parse_circuit("qubits 1\nrot -Z 0.123\n")
    op = c.ops[0]
    assert op.angle_class() is AngleClass.ARBITRARY
    assert op.pauli.sign == -1
    assert op.angle.radians == 0.123


def test_parse_errors_carry_position():
    with pytest.raises(CircuitParseError, match="line 2"):
        parse_circuit("qubits 2\nrot +XQ pi/4\n")
    with pytest.raises(CircuitParseError, match="length"):
        parse_circuit("qubits 3\nmeas +XZ\n")
    with pytest.raises(CircuitParseError, match="malformed angle"):
        parse_circuit("qubits 1\nrot +X pi/3x\n")
    with pytest.raises(CircuitParseError, match="zero qubits"):
        parse_circuit("qubits 0\n")
    with pytest.raises(CircuitParseError):
        parse_circuit("# only a comment\n")


def test_comments_and_blank_lines_ignored():
    c = parse_circuit("# header\n\nqubits 1\nrot +X pi/4  # trailing\n\nmeas -Z\n")
    assert c.L == 2
    assert c.ops[1].kind is OpKind.MEASUREMENT


@pytest.mark.parametrize("shift", [-2, -1, 0, 1, 2])
@pytest.mark.parametrize("sign", [1, -1])
def test_classification_stable_under_sign_and_pi_shift(shift, sign):
    quarter = Angle.exact(sign * Fraction(1, 4) + shift)
    eighth = Angle.exact(sign * Fraction(1, 8) + shift)
    assert quarter.classify() is AngleClass.CLIFFORD
    assert eighth.classify() is AngleClass.TLIKE
    # Same through the float path.
    assert Angle.from_float(sign * math.pi / 4 + shift * math.pi).classify() is AngleClass.CLIFFORD
    assert Angle.from_float(sign * math.pi / 8 + shift * math.pi).classify() is AngleClass.TLIKE


def test_half_turn_is_clifford_and_zero_is_not():
    assert Angle.exact(Fraction(1, 2)).classify() is AngleClass.CLIFFORD
    assert Angle.exact(Fraction(0)).classify() is AngleClass.ARBITRARY
    assert Angle.from_float(0.0).is_synthesis_trivial()
    assert Angle.from_float(math.pi / 2).is_synthesis_trivial()
    assert Angle.from_float(math.pi).is_synthesis_trivial()
    assert not Angle.from_float(0.4).is_synthesis_trivial()


def test_quarter_turn_directions():
    assert Angle.exact(Fraction(1, 4)).quarter_turn_directions() == [1]
    assert Angle.exact(Fraction(-1, 4)).quarter_turn_directions() == [-1]
    assert Angle.exact(Fraction(3, 4)).quarter_turn_directions() == [-1]
    assert Angle.exact(Fraction(1, 2)).quarter_turn_directions() == [1, 1]
    assert Angle.exact(Fraction(-1, 2)).quarter_turn_directions() == [1, 1]
    with pytest.raises(ValueError):
        Angle.exact(Fraction(1, 8)).quarter_turn_directions()


def test_render_parse_round_trip_generated():
    for seed in range(20):
        c = gen_random(n=6, L=40, clifford_frac=0.4, arb_frac=0.2, seed=seed)
        assert parse_circuit(render_circuit(c)) == c


@given(st.floats(min_value=-10, max_value=10, allow_nan=False))
def test_render_parse_round_trip_float_angles(theta):
    c = PbcCircuit(1, [PbcOp.rotation(SignedPauli.from_string("+X"), Angle.from_float(theta))])
    assert parse_circuit(render_circuit(c)) == c


def test_gen_deterministic():
    a = gen_random(5, 100, 0.3, 0.3, seed=42)
    b = gen_random(5, 100, 0.3, 0.3, seed=42)
    assert a == b
    assert a != gen_random(5, 100, 0.3, 0.3, seed=43)


def test_gen_all_clifford():
    c = gen_random(4, 50, 1.0, 0.0, seed=1)
    assert all(op.angle_class() is AngleClass.CLIFFORD for op in c.ops)


def test_gen_arbitrary_fraction_within_binomial_bound():
    c = gen_random(5, 1000, 0.0, 0.3, seed=2)
    arb = c.class_counts()["arbitrary"]
    assert 250 <= arb <= 350


def test_gen_invalid_fractions():
    with pytest.raises(ValueError):
        gen_random(3, 10, 0.8, 0.4, seed=0)
    with pytest.raises(ValueError):
        gen_random(3, 10, -0.1, 0.2, seed=0)


def test_gen_weight_dist_forms():
    fixed = gen_random(6, 30, 0.5, 0.2, weight_dist=2, seed=3)
    assert all(op.pauli.vector.weight() == 2 for op in fixed.ops)
    ranged = gen_random(6, 30, 0.5, 0.2, weight_dist=(1, 3), seed=3)
    assert all(1 <= op.pauli.vector.weight() <= 3 for op in ranged.ops)


def test_op_invariants():
    with pytest.raises(ValueError):
        PbcOp.measurement(SignedPauli.from_string("+II"))
    with pytest.raises(ValueError):
        PbcOp(OpKind.MEASUREMENT, SignedPauli.from_string("+X"), Angle.from_float(1.0))
    with pytest.raises(ValueError):
        PbcCircuit(2, [PbcOp.measurement(SignedPauli.from_string("+X"))])
