import math
from fractions import Fraction

import numpy as np
import pytest

from bbcc.allocation import allocate_contiguous
from bbcc.bbcode import synthetic_fallback
from bbcc.circuit import Angle, PbcCircuit, PbcOp
from bbcc.costmodel import REFERENCE_MODEL, estimate, per_rotation_failure
from bbcc.deferral import defer_transvection
from bbcc.lowering import (
    FactoryModel,
    SynthesisOracle,
    lower,
    placement_decision,
    sample_cascade_states,
)
from bbcc.pauli import SignedPauli

TABLE = synthetic_fallback(11)
MODEL = REFERENCE_MODEL
MU = 28.63


def prep(circuit: PbcCircuit, n_modules: int):
    d = defer_transvection(circuit)
    return d, allocate_contiguous(d, n_modules)


def lowered(circuit, n_modules=1, placement="fac", mode="expected", seed=0,
            factories=1, oracle=None, capacity=11):
    d = defer_transvection(circuit)
    alloc = allocate_contiguous(d, n_modules, capacity)
    return lower(
        d, alloc, TABLE, placement,
        oracle or SynthesisOracle(),
        FactoryModel(factories), MODEL, mode=mode, seed=seed,
    )


def meas(n, text):
    return PbcOp.measurement(SignedPauli.from_string(text))


def arb(text, theta=0.7):
    return PbcOp.rotation(SignedPauli.from_string(text), Angle.from_float(theta))


def tlike(text):
    return PbcOp.rotation(SignedPauli.from_string(text), Angle.exact(Fraction(1, 8)))


def test_native_measurement_lowered_minimally():
    c = PbcCircuit(3, [meas(3, "+ZII")])  # weight 1: cost 1 in the fallback
    program = lowered(c)
    counts = program.counts()
    assert counts["in"] == 1
    assert counts["aut"] == 2
    assert set(counts) == {"in", "aut"}


def test_costly_measurement_scales_instructions():
    c = PbcCircuit(3, [meas(3, "+XYZ")])  # weight 3 -> cost 13
    counts = lowered(c).counts()
    assert counts["in"] == 13
    assert counts["aut"] == 26


def test_three_module_op_uses_two_inter():
    c = PbcCircuit(33, [meas(33, "+" + "Z" + "I" * 10 + "Z" + "I" * 10 + "Z" + "I" * 10)])
    program = lowered(c, n_modules=3)
    counts = program.counts()
    assert counts["inter"] == 2
    # one local piece per module plus the pivot readout
    assert counts["in"] == 3 * 1 + 1


def test_nonadjacent_modules_route_through_intermediate_pivot():
    support = "Z" + "I" * 21 + "Z" + "I" * 10  # modules 0 and 2 only
    c = PbcCircuit(33, [meas(33, "+" + support)])
    program = lowered(c, n_modules=3)
    assert program.counts()["inter"] == 2  # chain crosses module 1's pivot
    chain = [t for t in program.instructions if t.kind == "inter"]
    assert chain[0].modules == (0, 1) and chain[1].modules == (1, 2)


def test_single_arbitrary_rotation_fac_expected_booking():
    c = PbcCircuit(1, [arb("+Z")])
    program = lowered(c, placement="fac")
    counts = program.counts()
    tele_nodes = [t for t in program.instructions if t.kind == "tele"]
    ls_nodes = [t for t in program.instructions if t.kind == "ls"]
    assert len(tele_nodes) == 2 and len(ls_nodes) == 2
    assert counts["tele"] == pytest.approx(2.0)
    assert counts["T"] == pytest.approx(2 * MU)
    assert counts["ls"] == pytest.approx(2 * MU)
    report = estimate(program, MODEL)
    assert report.p_circ == pytest.approx(
        per_rotation_failure(MODEL, MU, "fac"), rel=1e-12
    )


def test_single_arbitrary_rotation_lpu_expected_booking():
    c = PbcCircuit(1, [arb("+Z")])
    program = lowered(c, placement="lpu")
    counts = program.counts()
    assert counts["tele"] == pytest.approx(MU)
    assert counts["T"] == pytest.approx(MU)
    assert "ls" not in counts
    report = estimate(program, MODEL)
    assert report.p_circ == pytest.approx(
        per_rotation_failure(MODEL, MU, "lpu"), rel=1e-12
    )
    assert report.p_circ == pytest.approx(5.72e-2, rel=1e-2)


def test_placement_ratio_lands_near_paper_value():
    c = PbcCircuit(1, [arb("+Z")])
    fac = estimate(lowered(c, placement="fac"), MODEL).p_circ
    lpu = estimate(lowered(c, placement="lpu"), MODEL).p_circ
    assert 0.06 <= fac / lpu <= 0.08


def test_tlike_is_placement_independent():
    c = PbcCircuit(2, [tlike("+XZ")])
    for placement in ("lpu", "fac"):
        counts = lowered(c, placement=placement).counts()
        assert counts["T"] == 1
        assert counts["tele"] == 1
        assert "ls" not in counts


def test_trivial_arbitrary_rotation_vanishes():
    c = PbcCircuit(1, [arb("+Z", theta=math.pi / 2)])
    # pi/2 as a float within 1e-12 classifies Clifford and is deferred; use
    # a float that is trivial for synthesis but not snapped: none exists, so
    # exercise the oracle path directly with theta = 0.0.
    c = PbcCircuit(1, [PbcOp.rotation(SignedPauli.from_string("+Z"), Angle.from_float(0.0))])
    program = lowered(c)
    assert program.instructions == []


def test_sampled_mode_deterministic():
    c = PbcCircuit(4, [arb("+XXII"), tlike("+IZZI"), meas(4, "+ZZZZ"), arb("+IYXZ", 1.1)])
    a = lowered(c, mode="sampled", seed=7)
    b = lowered(c, mode="sampled", seed=7)
    assert [t.kind for t in a.instructions] == [t.kind for t in b.instructions]
    assert a.counts() == b.counts()
    assert a.counts() != lowered(c, mode="sampled", seed=8).counts()


def test_sampled_lpu_draws_near_mean():
    c = PbcCircuit(1, [arb("+Z")])
    counts = [lowered(c, placement="lpu", mode="sampled", seed=s).counts()["T"]
              for s in range(200)]
    assert abs(np.mean(counts) - MU) < 1.0


def test_sampled_cascade_mean_teleports():
    rng = np.random.default_rng(123)
    angle = Angle.from_float(0.7)
    draws = [len(sample_cascade_states(rng, angle)) for _ in range(200_000)]
    assert 1.98 <= np.mean(draws) <= 2.02


def test_cascade_truncates_on_clifford_doubling():
    rng = np.random.default_rng(0)
    angle = Angle.from_float(math.pi / 8)  # doubling gives pi/4: Clifford
    states = sample_cascade_states(rng, angle)
    assert states == [angle]


def test_placement_decision_examples():
    assert placement_decision(MODEL, MU) == "fac"
    crooked = MODEL.derive(log10p={"T": MODEL.log10p["inter"], "ls": -20.0})
    assert placement_decision(crooked, 4) == "lpu"  # 1 < 0.5 is false
    assert placement_decision(MODEL, 2) == "lpu"  # boundary: rhs is zero


def test_factory_assignment_alternates_with_two_factories():
    c = PbcCircuit(2, [tlike("+XI"), tlike("+IX"), tlike("+XX"), tlike("+ZZ")])
    program = lowered(c, factories=2)
    t_nodes = [t for t in program.instructions if t.kind == "T"]
    assert [t.factory for t in t_nodes] == [0, 1, 0, 1]


def test_lower_rejects_clifford_circuit():
    c = PbcCircuit(1, [PbcOp.rotation(SignedPauli.from_string("+Z"),
                                      Angle.exact(Fraction(1, 4)))])
    d, alloc = prep(PbcCircuit(1, [meas(1, "+Z")]), 1)
    with pytest.raises(ValueError, match="deferral"):
        lower(
            PbcCircuitWrapper(c), alloc, TABLE, "fac", SynthesisOracle(),
            FactoryModel(1), MODEL,
        )


class PbcCircuitWrapper:
    """Minimal stand-in exposing the DeferredCircuit surface."""

    def __init__(self, circuit):
        self.circuit = circuit


def test_oracle_validation():
    with pytest.raises(ValueError):
        SynthesisOracle(epsilon=1e-5)
    with pytest.raises(ValueError):
        SynthesisOracle(mode="fixed")
    oracle = SynthesisOracle(mode="fixed", fixed_n_t=10)
    assert oracle.mean_n_t(Angle.from_float(0.9)) == 10
    assert oracle.mean_n_t(Angle.from_float(0.0)) == 0
    stricter = SynthesisOracle(epsilon=1e-4)
    assert stricter.mean_n_t(Angle.from_float(0.9)) == pytest.approx(39.25)


def test_epsilon_tightening_favors_fac_more():
    c = PbcCircuit(1, [arb("+Z")])
    loose = estimate(lowered(c, placement="fac"), MODEL).p_circ / estimate(
        lowered(c, placement="lpu"), MODEL).p_circ
    tight_oracle = SynthesisOracle(epsilon=1e-4)
    tight = estimate(lowered(c, placement="fac", oracle=tight_oracle), MODEL).p_circ / estimate(
        lowered(c, placement="lpu", oracle=tight_oracle), MODEL).p_circ
    assert tight < loose


def test_local_restriction_pads_to_table_width():
    # Qubit 12 maps to slot 1 of module 1; the lookup succeeds on the padded
    # 11-qubit string.
    c = PbcCircuit(22, [meas(22, "+" + "I" * 11 + "IY" + "I" * 9)])
    program = lowered(c, n_modules=2)
    group = next(iter(program.meas_groups.values()))
    assert group.module == 1
    assert group.pauli.vector.to_string() == "IYIIIIIIIII"
