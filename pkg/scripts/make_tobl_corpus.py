"""Generate the committed corpus of 50 TOBL-certified tripartite boxes used
by the closure property tests.

Mix of sources: random local mixtures, random mixtures over the one-vs-rest
no-signalling decomposition, extreme points of the TOBL set found by
maximizing random objectives, and the pinned GYNI maximizer.  Every box is
certified TOBL (float margin) before it is written.  Run from the
repository root:

    python3 scripts/make_tobl_corpus.py
"""

import json
import pathlib
from importlib import resources

import numpy as np

from boxlab import bell, membership
from boxlab.bell import BellFunctional
from boxlab.model import Box, Partition, Scenario
from boxlab.schemas import BoxModel, box_from_model, box_to_model

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data" / "tobl_corpus.json"
SEED = 20260826
PART = Partition((0,), (1, 2))
SC = Scenario((2, 2, 2), (2, 2, 2))


def _ns_vertices_2222():
    """The 24 extreme points of the bipartite binary no-signalling polytope:
    16 deterministic boxes and 8 PR-type boxes."""
    sc = Scenario((2, 2), (2, 2))
    verts = [tab.astype(float) for _, tab in membership.local_vertices(sc)]
    for alpha in range(2):
        for beta in range(2):
            for gamma in range(2):
                tab = np.zeros(sc.table_shape)
                for x in range(2):
                    for y in range(2):
                        for a in range(2):
                            for b in range(2):
                                if (a ^ b) == ((x & y) ^ (alpha & x) ^ (beta & y) ^ gamma):
                                    tab[x, y, a, b] = 0.5
                verts.append(tab)
    return verts


def local_mixture(rng) -> np.ndarray:
    verts = [tab.astype(float) for _, tab in membership.local_vertices(SC)]
    w = rng.dirichlet(np.ones(len(verts)) * 0.3)
    return sum(wi * v for wi, v in zip(w, verts))


def nsbl_mixture(rng) -> np.ndarray:
    """Mixture of (deterministic single party) x (random NS bipartite box)."""
    ns_verts = _ns_vertices_2222()
    n_terms = int(rng.integers(2, 6))
    w = rng.dirichlet(np.ones(n_terms))
    tab = np.zeros(SC.table_shape)
    for wi in w:
        a_of_x = rng.integers(0, 2, size=2)  # party-0 deterministic strategy
        mix_w = rng.dirichlet(np.ones(4))
        picks = rng.choice(len(ns_verts), size=4, replace=False)
        group = sum(m * ns_verts[p] for m, p in zip(mix_w, picks))
        for x0 in range(2):
            a0 = a_of_x[x0]
            tab[x0, :, :, a0, :, :] += wi * group
    return tab


def tobl_vertex(rng) -> np.ndarray:
    coeffs = rng.integers(-3, 4, size=SC.table_shape)
    f = BellFunctional(SC, coeffs, name="random")
    _, attainer, _ = bell.max_over_set(f, membership.TOBL, PART, mode="float")
    return attainer.float_table()


def main():
    rng = np.random.default_rng(SEED)
    tables = []
    tables += [local_mixture(rng) for _ in range(20)]
    tables += [nsbl_mixture(rng) for _ in range(15)]
    tables += [tobl_vertex(rng) for _ in range(14)]
    golden = json.loads(
        resources.files("boxlab.data").joinpath("gyni_tobl_golden.json").read_text()
    )
    tables.append(
        box_from_model(BoxModel.model_validate(golden["attainer"])).float_table()
    )

    boxes = []
    for i, tab in enumerate(tables):
        box = Box(SC, tab, "float")
        res = membership.check_tobl(box, PART, mode="float")
        if not res.is_member:
            raise SystemExit(f"box {i} failed TOBL certification; refusing to write")
        boxes.append(box_to_model(box).model_dump(by_alias=True))
    payload = {
        "schema": "boxlab-corpus-v1",
        "seed": SEED,
        "class": membership.TOBL,
        "partition": "1|2,3",
        "boxes": boxes,
    }
    OUT.write_text(json.dumps(payload) + "\n")
    print(f"wrote {len(boxes)} certified boxes -> {OUT}")


if __name__ == "__main__":
    main()
