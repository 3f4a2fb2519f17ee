import math

import numpy as np
import pytest

from boxlab.model import BoxError, is_no_signalling, validate_box
from boxlab.quantum import (
    BinaryMeasurement,
    born_box,
    ghz_state,
    paper_ghz_box,
    parse_angle,
)


def test_ghz_state_normalized():
    for n in (2, 3, 5):
        psi = ghz_state(n)
        assert np.vdot(psi.amplitudes, psi.amplitudes) == pytest.approx(1.0)


def test_ghz_qubit_cap():
    with pytest.raises(BoxError):
        ghz_state(13)
    with pytest.raises(BoxError):
        ghz_state(1)


def test_measurement_from_angle_projectors():
    m = BinaryMeasurement.from_angle(math.pi / 4)
    p0, p1 = m.projectors
    assert np.allclose(p0 + p1, np.eye(2))
    assert np.allclose(p0 @ p0, p0)
    assert np.allclose(p0 @ p1, np.zeros((2, 2)))


def test_parse_angle():
    m = parse_angle("theta:0.5")
    m2 = BinaryMeasurement.from_angle(0.5)
    assert np.allclose(m.projectors[0], m2.projectors[0])
    with pytest.raises(BoxError):
        parse_angle("phi:0.5")


def test_paper_box_valid_and_no_signalling(ghz):
    assert validate_box(ghz).valid
    assert is_no_signalling(ghz).passed
    assert ghz.scenario.inputs == (2, 2, 2)
    assert ghz.mode == "float"


def test_paper_box_correlators(ghz):
    # perfect correlation of the first two parties' z measurements
    tab = ghz.float_table()
    # x = (0,0,0): parties 1,2 measure sigma_z; outcomes must agree
    block = tab[0, 0, 0]
    disagree = block[0, 1, :].sum() + block[1, 0, :].sum()
    assert disagree == pytest.approx(0.0, abs=1e-12)


def test_born_rule_singlet_statistics():
    # two-party GHZ (the phi+ state) with angles (0, pi/2) vs (pi/4, -pi/4)
    settings = [
        [BinaryMeasurement.from_angle(0.0), BinaryMeasurement.from_angle(math.pi / 2)],
        [
            BinaryMeasurement.from_angle(math.pi / 4),
            BinaryMeasurement.from_angle(-math.pi / 4),
        ],
    ]
    box = born_box(ghz_state(2), settings)
    assert validate_box(box).valid
    # E(x1,x2) = cos(theta1 - theta2) for phi+ in the zx plane
    tab = box.float_table()
    for x1, t1 in enumerate((0.0, math.pi / 2)):
        for x2, t2 in enumerate((math.pi / 4, -math.pi / 4)):
            block = tab[x1, x2]
            corr = block[0, 0] + block[1, 1] - block[0, 1] - block[1, 0]
            assert corr == pytest.approx(math.cos(t1 - t2), abs=1e-12)
