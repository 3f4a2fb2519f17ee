import json
import pathlib
from fractions import Fraction

import numpy as np
import pytest

from boxlab.model import Box, Scenario
from boxlab.quantum import paper_ghz_box
from boxlab.schemas import BoxModel, box_from_model

DATA = pathlib.Path(__file__).parent / "data"


def pr_box() -> Box:
    """Extremal no-signalling box saturating the CHSH functional used here
    (sign pattern with the minus on the x=(1,0) correlator): outputs satisfy
    a XOR b = x1 AND (NOT x2), giving CHSH = 4."""
    sc = Scenario((2, 2), (2, 2))
    tab = np.empty(sc.table_shape, dtype=object)
    for x1 in range(2):
        for x2 in range(2):
            for a in range(2):
                for b in range(2):
                    hit = (a ^ b) == (x1 & (1 ^ x2))
                    tab[x1, x2, a, b] = Fraction(1, 2) if hit else Fraction(0)
    return Box(sc, tab, "rational")


def uniform_box(inputs, outputs) -> Box:
    return Box.uniform(Scenario(tuple(inputs), tuple(outputs)))


@pytest.fixture(scope="session")
def ghz():
    return paper_ghz_box()


@pytest.fixture(scope="session")
def corpus():
    payload = json.loads((DATA / "tobl_corpus.json").read_text())
    boxes = [box_from_model(BoxModel.model_validate(b)) for b in payload["boxes"]]
    return payload, boxes
