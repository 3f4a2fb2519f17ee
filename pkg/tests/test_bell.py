import math
from fractions import Fraction

import numpy as np
import pytest

from boxlab import bell, membership
from boxlab.model import Box, Partition, Scenario

from conftest import pr_box

PART = Partition((0,), (1, 2))


def test_chsh_sign_convention():
    # correlator coefficients (+ + - +) on inputs (0,0),(0,1),(1,0),(1,1)
    f = bell.chsh()
    # a deterministic box with all outputs 0 has every correlator +1, so the
    # (+ + - +) pattern over inputs (0,0),(0,1),(1,0),(1,1) sums to 2
    det = Box.deterministic(f.scenario, [[0, 0], [0, 0]], mode="rational")
    assert bell.evaluate(f, det) == 2


def test_chsh_pr_box_value():
    assert bell.evaluate(bell.chsh(), pr_box()) == 4


def test_chsh_local_bound():
    assert bell.local_bound(bell.chsh()) == 2


def test_gyni_properties():
    f = bell.gyni()
    assert bell.local_bound(f) == 1
    assert bell.grouped_local_bound(f, PART) == 2


def test_evaluate_mode_types(ghz):
    f = bell.chsh()
    assert isinstance(bell.evaluate(f, pr_box()), Fraction)
    wired_val = bell.evaluate(bell.gyni(), ghz)
    assert isinstance(wired_val, float)


def test_evaluate_scenario_mismatch(ghz):
    from boxlab.model import BoxError

    with pytest.raises(BoxError):
        bell.evaluate(bell.chsh(), ghz)


def test_ns_max_chsh():
    value, attainer, _ = bell.max_over_set(bell.chsh(), bell.NS, mode="rational")
    assert value == 4
    assert membership.check_local(attainer, mode="rational").verdict == membership.NON_MEMBER


def test_local_max_chsh():
    value, attainer, _ = bell.max_over_set(bell.chsh(), membership.LOCAL, mode="rational")
    assert value == 2
    assert membership.check_local(attainer, mode="rational").is_member


def test_gyni_nsbl_max_exact():
    value, attainer, _ = bell.max_over_set(
        bell.gyni(), membership.NSBL, PART, mode="rational"
    )
    assert value == 1
    assert membership.check_nsbl(attainer, PART, mode="rational").is_member


def test_gyni_tobl_max_exceeds_nsbl():
    value, attainer, _ = bell.max_over_set(
        bell.gyni(), membership.TOBL, PART, mode="rational"
    )
    assert value > 1
    assert membership.check_tobl(attainer, PART, mode="rational").is_member
    assert membership.check_nsbl(attainer, PART, mode="rational").verdict == membership.NON_MEMBER


def test_float_rational_max_agree():
    exact, _, _ = bell.max_over_set(bell.gyni(), membership.NSBL, PART, mode="rational")
    floaty, _, _ = bell.max_over_set(bell.gyni(), membership.NSBL, PART, mode="float")
    assert float(exact) == pytest.approx(floaty, abs=1e-9)


def test_functional_shape_mismatch():
    from boxlab.model import BoxError

    with pytest.raises(BoxError):
        bell.BellFunctional(Scenario((2, 2), (2, 2)), np.zeros((2, 2)))
