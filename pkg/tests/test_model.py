import random
from fractions import Fraction

import numpy as np
import pytest

from boxlab.model import (
    Box,
    BoxError,
    ModeMismatchError,
    Partition,
    Relabeling,
    Scenario,
    SignallingError,
    is_no_signalling,
    marginal,
    mix,
    rationalize,
    relabel,
    tensor,
    validate_box,
)

from conftest import pr_box


def test_scenario_basics():
    sc = Scenario((2, 3), (2, 2))
    assert sc.parties == 2
    assert sc.table_shape == (2, 3, 2, 2)
    assert sc.table_size == 24
    assert len(list(sc.joint_inputs())) == 6


def test_scenario_rejects_bad_alphabets():
    with pytest.raises(BoxError):
        Scenario((2, 0), (2, 2))
    with pytest.raises(BoxError):
        Scenario((2,), (2, 2))


def test_scenario_size_cap():
    with pytest.raises(BoxError):
        Scenario((10,) * 8, (10,) * 8)


def test_uniform_box_is_valid():
    box = Box.uniform(Scenario((2, 2), (2, 2)))
    report = validate_box(box)
    assert report.valid
    assert report.max_residual <= 1e-12


def test_deterministic_box():
    sc = Scenario((2, 2), (2, 2))
    # party 1 copies its input, party 2 negates its input
    box = Box.deterministic(sc, [[0, 1], [1, 0]])
    assert box.prob((0, 1), (0, 0)) == 1
    assert box.prob((0, 0), (0, 0)) == 0
    assert box.prob((1, 0), (1, 1)) == 1
    assert validate_box(box).valid


def test_mode_mismatch_refused():
    sc = Scenario((2, 2), (2, 2))
    rational = Box.uniform(sc, "rational")
    floaty = rational.as_float()
    assert rational.mode == "rational"
    assert floaty.mode == "float"
    with pytest.raises(ModeMismatchError):
        mix([rational, floaty], [Fraction(1, 2), Fraction(1, 2)])


def test_negative_entry_fails_validation():
    sc = Scenario((2, 2), (2, 2))
    tab = Box.uniform(sc).as_float().table.copy()
    tab[0, 0, 0, 0] = -0.25
    tab[0, 0, 1, 1] = 0.75
    report = validate_box(Box(sc, tab, "float"))
    assert not report.valid
    assert report.most_negative == pytest.approx(-0.25)


def test_pr_box_is_no_signalling():
    assert is_no_signalling(pr_box()).passed


def test_signalling_box_detected():
    sc = Scenario((2, 2), (2, 2))
    # party 2's output copies party 1's input: maximally signalling
    tab = np.zeros(sc.table_shape)
    for x1 in range(2):
        for x2 in range(2):
            tab[x1, x2, 0, x1] = 1.0
    report = is_no_signalling(Box(sc, tab, "float"))
    assert not report.passed
    assert report.max_discrepancy == pytest.approx(1.0)


def test_marginal_values_and_refusal():
    box = pr_box()
    marg = marginal(box, (0,))
    assert marg.scenario.inputs == (2,)
    for x in range(2):
        for a in range(2):
            assert marg.prob((a,), (x,)) == Fraction(1, 2)
    sc = Scenario((2, 2), (2, 2))
    tab = np.zeros(sc.table_shape)
    for x1 in range(2):
        for x2 in range(2):
            tab[x1, x2, 0, x1] = 1.0
    with pytest.raises(SignallingError):
        marginal(Box(sc, tab, "float"), (1,))


def test_mix_weights():
    sc = Scenario((2, 2), (2, 2))
    a = Box.deterministic(sc, [[0, 0], [0, 0]], mode="rational")
    b = Box.deterministic(sc, [[1, 1], [1, 1]], mode="rational")
    m = mix([a, b], [Fraction(1, 4), Fraction(3, 4)])
    assert m.prob((0, 0), (0, 0)) == Fraction(1, 4)
    assert m.prob((1, 1), (0, 0)) == Fraction(3, 4)
    with pytest.raises(BoxError):
        mix([a, b], [Fraction(1, 2), Fraction(1, 4)])


def test_output_flip_relabel():
    box = pr_box()
    r = Relabeling.output_flip(box.scenario, party=0, at_input=1)
    flipped = relabel(box, r)
    # at x1=1 the outputs of party 1 are swapped; x1=0 rows untouched
    assert flipped.prob((0, 0), (0, 0)) == box.prob((0, 0), (0, 0))
    assert flipped.prob((0, 0), (1, 0)) == box.prob((1, 0), (1, 0))


def test_relabel_inverse_round_trip_seeded():
    rng = np.random.default_rng(11)
    random.seed(11)
    for _ in range(60):
        n = random.choice([2, 3])
        same = random.random() < 0.6
        ins = (random.choice([2, 3]),) * n if same else tuple(
            random.choice([2, 3]) for _ in range(n)
        )
        outs = (random.choice([2, 3]),) * n
        pp = tuple(int(v) for v in rng.permutation(n)) if same else None
        sc = Scenario(ins, outs)
        tab = rng.random(sc.table_shape)
        tab /= tab.sum(axis=tuple(range(n, 2 * n)), keepdims=True)
        box = Box(sc, tab, "float")
        r = Relabeling(
            tuple(tuple(int(v) for v in rng.permutation(ins[i])) for i in range(n)),
            tuple(
                tuple(tuple(int(v) for v in rng.permutation(outs[i])) for _ in range(ins[i]))
                for i in range(n)
            ),
            pp,
        )
        back = relabel(relabel(box, r), r.inverse())
        assert np.allclose(back.float_table(), box.float_table())
        back2 = relabel(relabel(box, r.inverse()), r)
        assert np.allclose(back2.float_table(), box.float_table())


def test_tensor_product():
    a = pr_box()
    b = Box.uniform(Scenario((2,), (2,)), "rational")
    t = tensor(a, b)
    assert t.scenario.inputs == (2, 2, 2)
    assert t.prob((0, 0, 0), (0, 0, 0)) == a.prob((0, 0), (0, 0)) * Fraction(1, 2)


def test_rationalize_round_trip(ghz):
    rbox, residual = rationalize(ghz, 1e-10)
    assert rbox.mode == "rational"
    assert residual <= 2e-10
    assert validate_box(rbox).valid
    # exact renormalization: rows sum to exactly 1
    for x in rbox.scenario.joint_inputs():
        total = sum(rbox.prob(a, x) for a in rbox.scenario.joint_outputs())
        assert total == 1


def test_partition_parse():
    p = Partition.parse("1|2,3")
    assert p.group_a == (0,)
    assert p.group_b == (1, 2)
    with pytest.raises(BoxError):
        Partition.parse("1,2")
    with pytest.raises(BoxError):
        Partition((0,), (0, 1))
