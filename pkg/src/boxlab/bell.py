"""Bell functionals: construction, evaluation, local bounds by enumeration,
and maxima over membership-constrained sets by LP."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import lp as lpmod
from . import membership as mb
from .model import Box, BoxError, Partition, Scenario, FLOAT, RATIONAL


@dataclass(frozen=True)
class BellFunctional:
    """Coefficient tensor over a scenario; evaluation is the plain inner
    product with the probability table.  Bounds are reported as maxima; the
    witness sign convention (functional >= 0 on the class) is the negation,
    kept in metadata when known."""

    scenario: Scenario
    coefficients: np.ndarray
    name: str = ""
    known_bounds: dict = field(default_factory=dict)

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients)
        if coeffs.shape != self.scenario.table_shape:
            raise BoxError("coefficient shape does not match scenario")
        tab = np.empty(coeffs.shape, dtype=object)
        tab.ravel()[:] = [Fraction(v) for v in coeffs.ravel()]
        tab.flags.writeable = False
        object.__setattr__(self, "coefficients", tab)


def evaluate(f: BellFunctional, box: Box):
    """c . P; a Fraction for rational boxes, a float otherwise."""
    if f.scenario != box.scenario:
        raise BoxError("functional and box scenarios differ")
    if box.mode == RATIONAL:
        return sum(c * p for c, p in zip(f.coefficients.ravel(), box.table.ravel()))
    return float(
        np.dot(f.coefficients.astype(np.float64).ravel(), box.table.ravel())
    )


def chsh() -> BellFunctional:
    """beta = C(0,0) + C(0,1) + C(1,1) - C(1,0) with
    C(x1,x2) = P(a1=a2|x1,x2) - P(a1!=a2|x1,x2)."""
    sc = Scenario((2, 2), (2, 2))
    coeffs = np.zeros(sc.table_shape, dtype=int)
    for x1, x2 in itertools.product(range(2), repeat=2):
        sign = -1 if (x1, x2) == (1, 0) else 1
        for a1, a2 in itertools.product(range(2), repeat=2):
            coeffs[x1, x2, a1, a2] = sign * (1 if a1 == a2 else -1)
    return BellFunctional(sc, coeffs, "CHSH", {"local_max": 2})


def gyni() -> BellFunctional:
    """P(000|000) + P(110|011) + P(011|101) + P(101|110)."""
    sc = Scenario((2, 2, 2), (2, 2, 2))
    coeffs = np.zeros(sc.table_shape, dtype=int)
    for x, a in [
        ((0, 0, 0), (0, 0, 0)),
        ((0, 1, 1), (1, 1, 0)),
        ((1, 0, 1), (0, 1, 1)),
        ((1, 1, 0), (1, 0, 1)),
    ]:
        coeffs[x + a] = 1
    return BellFunctional(sc, coeffs, "GYNI", {"local_max": 1, "nsbl_max": 1})


def local_bound(
    f: BellFunctional, vertex_cap: int = mb.DEFAULT_VERTEX_CAP
) -> Fraction:
    """Exact maximum over products of deterministic single-party strategies."""
    sc = f.scenario
    n_verts = mb.local_vertex_count(sc)
    if n_verts > vertex_cap:
        raise BoxError(f"vertex count {n_verts} exceeds cap {vertex_cap}")
    best = None
    coeffs = f.coefficients
    for _, tab in mb.local_vertices(sc):
        v = sum(c for c, ind in zip(coeffs.ravel(), tab.ravel()) if ind)
        if best is None or v > best:
            best = v
    return best


def grouped_local_bound(
    f: BellFunctional, partition: Partition, vertex_cap: int = mb.DEFAULT_VERTEX_CAP
) -> Fraction:
    """Exact maximum over products of per-group deterministic strategies,
    where a group strategy is any map from its joint inputs to its joint
    outputs."""
    sc = f.scenario
    partition.check_covers(sc.parties)
    groups = [partition.group_a, partition.group_b]
    counts = [
        math.prod(sc.outputs[p] for p in g) ** math.prod(sc.inputs[p] for p in g)
        for g in groups
    ]
    if math.prod(counts) > vertex_cap:
        raise BoxError(f"vertex count {math.prod(counts)} exceeds cap {vertex_cap}")
    coeffs = f.coefficients
    in_sizes = [[sc.inputs[p] for p in g] for g in groups]
    best = None
    for sa in mb.det_strategies(groups[0], sc):
        for sb in mb.det_strategies(groups[1], sc):
            v = Fraction(0)
            for x in sc.joint_inputs():
                a = [0] * sc.parties
                for g, strat, ins in ((0, sa, in_sizes[0]), (1, sb, in_sizes[1])):
                    xg = tuple(x[p] for p in groups[g])
                    ag = strat(mb._flat(xg, ins))
                    for k, p in enumerate(groups[g]):
                        a[p] = ag[k]
                v += coeffs[x + tuple(a)]
            if best is None or v > best:
                best = v
    return best


NS = "NS"


def _ns_lp(sc: Scenario, coeffs: np.ndarray) -> lpmod.LinearProgram:
    """LP over the full no-signalling polytope, variables = table entries."""
    n = sc.table_size
    sizes = sc.table_shape
    lp = lpmod.LinearProgram(n, objective=list(coeffs.ravel()))
    for x in sc.joint_inputs():
        row = [0] * n
        for a in sc.joint_outputs():
            row[mb._flat(x + a, sizes)] = 1
        lp.add_eq(row, 1)
    # no-signalling: every single party's complement-marginal input-independent
    for i in range(sc.parties):
        others = [p for p in range(sc.parties) if p != i]
        for x_others in itertools.product(*(range(sc.inputs[p]) for p in others)):
            for a_others in itertools.product(*(range(sc.outputs[p]) for p in others)):
                rows = []
                for xi in range(sc.inputs[i]):
                    row = [0] * n
                    for ai in range(sc.outputs[i]):
                        x = [0] * sc.parties
                        a = [0] * sc.parties
                        x[i] = xi
                        a[i] = ai
                        for p, v in zip(others, x_others):
                            x[p] = v
                        for p, v in zip(others, a_others):
                            a[p] = v
                        row[mb._flat(tuple(x) + tuple(a), sizes)] = 1
                    rows.append(row)
                for other in rows[1:]:
                    lp.add_eq([u - v for u, v in zip(rows[0], other)], 0)
    return lp


def max_over_set(
    f: BellFunctional,
    class_tag: str,
    partition: Partition | None = None,
    mode: str = "exact",
    tolerance: float = 1e-9,
) -> tuple[object, Box, lpmod.LPResult]:
    """Maximum of the functional over a correlation class, with an attaining
    box reconstructed from the LP primal."""
    mode = lpmod._normalize_mode(mode)
    sc = f.scenario
    coeffs = f.coefficients
    if class_tag == NS:
        lp = _ns_lp(sc, coeffs)
        res = lpmod.maximize(lp, mode=mode, tolerance=tolerance)
        if res.status != lpmod.OPTIMAL:
            raise BoxError(f"NS maximization failed: {res.status}")
        tab = np.array(res.x, dtype=object if mode == "exact" else float)
        box = Box(sc, tab.reshape(sc.table_shape), RATIONAL if mode == "exact" else FLOAT)
        return res.value, box, res
    if class_tag == mb.LOCAL:
        n_verts = mb.local_vertex_count(sc)
        if n_verts > mb.DEFAULT_VERTEX_CAP:
            raise BoxError("vertex cap exceeded")
        combos, cols, vals = [], [], []
        for combo, tab in mb.local_vertices(sc):
            combos.append(combo)
            cols.append(tab)
            vals.append(sum(c for c, ind in zip(coeffs.ravel(), tab.ravel()) if ind))
        lp = lpmod.LinearProgram(n_verts, objective=vals)
        lp.add_eq([1] * n_verts, 1)
        res = lpmod.maximize(lp, mode=mode, tolerance=tolerance)
        if res.status != lpmod.OPTIMAL:
            raise BoxError(f"Local maximization failed: {res.status}")
        if mode == "exact":
            tab = sum((w * c.astype(object) for w, c in zip(res.x, cols) if w != 0),
                      np.zeros(sc.table_shape, dtype=object))
        else:
            tab = sum(w * c.astype(float) for w, c in zip(res.x, cols))
        return res.value, Box(sc, tab, RATIONAL if mode == "exact" else FLOAT), res
    if partition is None:
        raise BoxError(f"class {class_tag} needs a partition")
    partition.check_covers(sc.parties)
    side_a, side_b = mb._pick_sides_for_scenario(sc, partition)
    if len(side_a) != 1 and class_tag in (mb.NSBL, mb.TOBL):
        raise BoxError(f"{class_tag} maximization needs a singleton side")
    families = mb._singleton_families(sc, side_a) if len(side_a) == 1 else None
    if families is None:
        families = [{"joint": s} for s in mb.det_strategies(side_a, sc)]
    orders_b = mb._side_b_orders(class_tag, side_b)
    builder = mb._DecompositionLP(sc, side_a, side_b, families, orders_b, class_tag)
    lp = builder.build(None, coeffs)
    res = lpmod.maximize(lp, mode=mode, tolerance=tolerance)
    if res.status != lpmod.OPTIMAL:
        raise BoxError(f"{class_tag} maximization failed: {res.status}")
    decomp = builder.extract(res.x, class_tag, partition, mode == "float")
    box = mb.reconstruct(decomp)[next(iter(decomp.terms[0].tables.keys()))]
    return res.value, box, res
