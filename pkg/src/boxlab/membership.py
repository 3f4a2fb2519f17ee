"""Membership of a box in the correlation classes (local, bilocal variants)
with verifiable certificates.

Every class is decided by a linear program over decompositions
``P = sum_l p_l . D_A^l . T_B^l`` where one side is enumerated over its
deterministic extreme strategies and the other side's tables are continuous
LP variables scaled by the term weight.  Member verdicts return an explicit
decomposition; NonMember verdicts in exact mode return a Farkas certificate
(a separating hyperplane), re-verified by substitution.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import lp as lpmod
from .model import (
    EPS_MEMBERSHIP,
    FLOAT,
    RATIONAL,
    Box,
    BoxError,
    Partition,
    Scenario,
)

MEMBER = "Member"
NON_MEMBER = "NonMember"
UNDECIDED = "Undecided"

LOCAL = "Local"
BL = "BL"
NSBL = "NSBL"
TOBL = "TOBL"
GROUPED_TOBL = "GroupedTOBL"

DEFAULT_VERTEX_CAP = 10**6


@dataclass(frozen=True)
class DeterministicStrategy:
    """Deterministic map from the joint inputs of some parties to their joint
    outputs; ``outputs`` is indexed by the row-major flattened joint input."""

    parties: tuple[int, ...]
    outputs: tuple[tuple[int, ...], ...]

    def __call__(self, joint_input_index: int) -> tuple[int, ...]:
        return self.outputs[joint_input_index]


@dataclass
class Term:
    weight: object
    # per enumerated-side order label, the deterministic strategy
    strategies: dict[str, DeterministicStrategy]
    # per continuous-side order label, a table over (x_B..., a_B...)
    tables: dict[str, np.ndarray]


@dataclass
class Decomposition:
    class_tag: str
    scenario: Scenario
    partition: Partition | None
    side_a: tuple[int, ...]
    side_b: tuple[int, ...]
    terms: list[Term]

    def weights(self):
        return [t.weight for t in self.terms]


@dataclass
class FarkasCertificate:
    """Row multipliers proving LP infeasibility; ``row_labels`` names the
    constraint each multiplier belongs to.  For vertex-form LPs the
    multipliers on the box rows are the coefficients of a separating Bell
    functional (nonpositive on every class vertex, positive on the box)."""

    row_labels: list
    multipliers: list


@dataclass
class MembershipResult:
    verdict: str
    class_tag: str
    certificate: object = None
    margin: float | None = None
    detail: str = ""

    @property
    def is_member(self) -> bool:
        return self.verdict == MEMBER


def _flat(values: Sequence[int], sizes: Sequence[int]) -> int:
    idx = 0
    for v, s in zip(values, sizes):
        idx = idx * s + v
    return idx


def _unflat(idx: int, sizes: Sequence[int]) -> tuple[int, ...]:
    out = []
    for s in reversed(sizes):
        out.append(idx % s)
        idx //= s
    return tuple(reversed(out))


def det_strategies(parties: tuple[int, ...], scenario: Scenario):
    """All deterministic maps from the parties' joint inputs to their joint
    outputs (the extreme points of the unconstrained-table polytope)."""
    in_sizes = [scenario.inputs[p] for p in parties]
    out_sizes = [scenario.outputs[p] for p in parties]
    n_in = math.prod(in_sizes)
    outs = list(itertools.product(*(range(s) for s in out_sizes)))
    for assignment in itertools.product(outs, repeat=n_in):
        yield DeterministicStrategy(parties, tuple(assignment))


def local_vertices(scenario: Scenario):
    """Products of single-party deterministic strategies, as flat tables."""
    per_party = [
        [tuple(s) for s in itertools.product(range(scenario.outputs[i]), repeat=scenario.inputs[i])]
        for i in range(scenario.parties)
    ]
    for combo in itertools.product(*per_party):
        tab = np.zeros(scenario.table_shape, dtype=np.int8)
        for x in scenario.joint_inputs():
            a = tuple(combo[i][x[i]] for i in range(scenario.parties))
            tab[x + a] = 1
        yield combo, tab


def local_vertex_count(scenario: Scenario) -> int:
    return math.prod(
        scenario.outputs[i] ** scenario.inputs[i] for i in range(scenario.parties)
    )


def _mode_for(box: Box, mode: str | None) -> str:
    if mode is not None:
        return lpmod._normalize_mode(mode)
    return "exact" if box.mode == RATIONAL else "float"


def check_local(
    box: Box,
    mode: str | None = None,
    tolerance: float = EPS_MEMBERSHIP,
    vertex_cap: int = DEFAULT_VERTEX_CAP,
) -> MembershipResult:
    """Membership in the shared-randomness product polytope."""
    sc = box.scenario
    n_verts = local_vertex_count(sc)
    if n_verts > vertex_cap:
        return MembershipResult(
            UNDECIDED, LOCAL, detail=f"vertex count {n_verts} exceeds cap {vertex_cap}"
        )
    solver_mode = _mode_for(box, mode)
    combos = []
    lp = lpmod.LinearProgram(n_verts)
    cols = []
    for combo, tab in local_vertices(sc):
        combos.append(combo)
        cols.append(tab.ravel())
    V = np.array(cols).T  # (table entries) x (vertices)
    target = box.table.ravel()
    labels = [("box",) + xa for xa in itertools.product(*(range(s) for s in sc.table_shape))]
    for r in range(V.shape[0]):
        lp.add_eq(list(V[r]), target[r])
    lp.add_eq([1] * n_verts, 1)
    labels.append(("norm",))
    res = lpmod.solve_feasibility(lp, mode=solver_mode, tolerance=tolerance)
    if res.status == lpmod.FEASIBLE:
        terms = []
        for w, combo in zip(res.x, combos):
            if w == 0 or (solver_mode == "float" and w <= 1e-14):
                continue
            strategies = {
                str(i): DeterministicStrategy((i,), tuple((a,) for a in combo[i]))
                for i in range(sc.parties)
            }
            terms.append(Term(w, strategies, {}))
        cert = Decomposition(LOCAL, sc, None, tuple(range(sc.parties)), (), terms)
        return MembershipResult(MEMBER, LOCAL, cert, margin=res.margin)
    if res.status == lpmod.INFEASIBLE:
        cert = None
        if res.farkas is not None:
            cert = FarkasCertificate(labels, res.farkas)
        return MembershipResult(NON_MEMBER, LOCAL, cert, margin=res.margin)
    return MembershipResult(UNDECIDED, LOCAL, detail=res.detail)


# ---------------------------------------------------------------------------
# bilocal family:  BL / NSBL / TOBL / grouped TOBL
# ---------------------------------------------------------------------------


def _perm_label(perm: tuple[int, ...]) -> str:
    return "->".join(str(p + 1) for p in perm)


def _side_b_orders(variant: str, side_b: tuple[int, ...]) -> list[tuple[int, ...] | None]:
    if variant in (BL, NSBL):
        return [None]  # a single unordered table
    return [tuple(p) for p in itertools.permutations(side_b)]


def _order_key(order: tuple[int, ...] | None) -> str:
    return "joint" if order is None else _perm_label(order)


class _DecompositionLP:
    """Shared builder for the bilocal-family LPs.

    Side A is enumerated: ``families[l]`` maps an order label to a
    DeterministicStrategy on ``side_a`` (a single label ``"joint"`` unless
    side A itself carries time orders).  Side B tables are continuous,
    one per order in ``orders_b``, scaled by the term weight.
    """

    def __init__(
        self,
        scenario: Scenario,
        side_a: tuple[int, ...],
        side_b: tuple[int, ...],
        families: list[dict[str, DeterministicStrategy]],
        orders_b: list[tuple[int, ...] | None],
        variant: str,
    ):
        self.sc = scenario
        self.side_a = side_a
        self.side_b = side_b
        self.families = families
        self.orders_b = orders_b
        self.variant = variant
        self.in_a = [scenario.inputs[p] for p in side_a]
        self.out_a = [scenario.outputs[p] for p in side_a]
        self.in_b = [scenario.inputs[p] for p in side_b]
        self.out_b = [scenario.outputs[p] for p in side_b]
        self.tab_b = math.prod(self.in_b) * math.prod(self.out_b)
        self.n_fam = len(families)
        self.n_orders = len(orders_b)
        # layout: q tables per (family, order), then the weights p_l
        self.n_vars = self.n_fam * self.n_orders * self.tab_b + self.n_fam
        self.p_base = self.n_fam * self.n_orders * self.tab_b

    def q_index(self, fam: int, order_i: int, x_b: tuple[int, ...], a_b: tuple[int, ...]) -> int:
        t = _flat(tuple(x_b) + tuple(a_b), self.in_b + self.out_b)
        return (fam * self.n_orders + order_i) * self.tab_b + t

    def _recon_row(self, order_a: str, order_i: int, x: tuple[int, ...], a: tuple[int, ...]):
        row = [0] * self.n_vars
        x_a = tuple(x[p] for p in self.side_a)
        a_a = tuple(a[p] for p in self.side_a)
        x_b = tuple(x[p] for p in self.side_b)
        a_b = tuple(a[p] for p in self.side_b)
        xa_flat = _flat(x_a, self.in_a)
        for l, fam in enumerate(self.families):
            if fam[order_a](xa_flat) == a_a:
                row[self.q_index(l, order_i, x_b, a_b)] += 1
        return row

    def build(self, box: Box | None, objective: np.ndarray | None) -> lpmod.LinearProgram:
        lp = lpmod.LinearProgram(self.n_vars)
        self.row_labels = []
        sc = self.sc
        order_a_labels = list(self.families[0].keys())
        pairs = [
            (oa, oi) for oa in order_a_labels for oi in range(self.n_orders)
        ]
        if box is not None:
            for oa, oi in pairs:
                for x in sc.joint_inputs():
                    for a in sc.joint_outputs():
                        lp.add_eq(self._recon_row(oa, oi, x, a), box.table[x + a])
                        self.row_labels.append(("box", oa, _order_key(self.orders_b[oi]), x, a))
        else:
            # all order pairs must reconstruct one common (free) box
            ref = pairs[0]
            for oa, oi in pairs[1:]:
                for x in sc.joint_inputs():
                    for a in sc.joint_outputs():
                        r0 = self._recon_row(ref[0], ref[1], x, a)
                        r1 = self._recon_row(oa, oi, x, a)
                        lp.add_eq([u - v for u, v in zip(r0, r1)], 0)
                        self.row_labels.append(("tie", oa, oi, x, a))
        # per-term normalization ties each table to the weight
        for l in range(self.n_fam):
            for oi in range(self.n_orders):
                for x_b in itertools.product(*(range(s) for s in self.in_b)):
                    row = [0] * self.n_vars
                    for a_b in itertools.product(*(range(s) for s in self.out_b)):
                        row[self.q_index(l, oi, x_b, a_b)] = 1
                    row[self.p_base + l] = -1
                    lp.add_eq(row, 0)
                    self.row_labels.append(("norm", l, oi, x_b))
        self._signalling_rows(lp)
        row = [0] * self.n_vars
        for l in range(self.n_fam):
            row[self.p_base + l] = 1
        lp.add_eq(row, 1)
        self.row_labels.append(("total",))
        if objective is not None:
            oa, oi = pairs[0]
            c = [0] * self.n_vars
            xa_sizes = self.in_a
            for l, fam in enumerate(self.families):
                for x in sc.joint_inputs():
                    x_a = tuple(x[p] for p in self.side_a)
                    a_a = fam[oa](_flat(x_a, xa_sizes))
                    x_b = tuple(x[p] for p in self.side_b)
                    for a_b in itertools.product(*(range(s) for s in self.out_b)):
                        a = [0] * sc.parties
                        for k, p in enumerate(self.side_a):
                            a[p] = a_a[k]
                        for k, p in enumerate(self.side_b):
                            a[p] = a_b[k]
                        c[self.q_index(l, oi, x_b, a_b)] += objective[x + tuple(a)]
            lp.objective = c
        return lp

    def _marginal_row_entries(self, l, oi, prefix_parties, a_pref, x_b):
        """Indices contributing to the prefix marginal at joint input x_b."""
        rest = [p for p in self.side_b if p not in prefix_parties]
        entries = []
        for a_rest in itertools.product(*(range(self.sc.outputs[p]) for p in rest)):
            a_b = [0] * len(self.side_b)
            for p, v in zip(prefix_parties, a_pref):
                a_b[self.side_b.index(p)] = v
            for p, v in zip(rest, a_rest):
                a_b[self.side_b.index(p)] = v
            entries.append(self.q_index(l, oi, x_b, tuple(a_b)))
        return entries

    def _signalling_rows(self, lp: lpmod.LinearProgram):
        """NS rows (NSBL) or one-way/prefix-consistency rows (TOBL, grouped)."""
        if self.variant == BL:
            return
        m = len(self.side_b)
        if self.variant == NSBL:
            # full no-signalling inside the grouped side, every proper subset
            for l in range(self.n_fam):
                for r in range(1, m):
                    for keep in itertools.combinations(self.side_b, r):
                        self._independence_rows(lp, l, 0, keep)
            return
        # one-way constraints per order: the marginal of every order prefix
        # must not depend on the later parties' inputs
        for l in range(self.n_fam):
            for oi, order in enumerate(self.orders_b):
                for mlen in range(1, m):
                    self._independence_rows(lp, l, oi, tuple(order[:mlen]))
            # cross-order consistency: orders sharing a prefix share its marginal
            for i, j in itertools.combinations(range(self.n_orders), 2):
                oi_ord, oj_ord = self.orders_b[i], self.orders_b[j]
                shared = 0
                while shared < m and oi_ord[shared] == oj_ord[shared]:
                    shared += 1
                if shared == 0 or shared == m:
                    continue
                prefix = tuple(oi_ord[:shared])
                self._equal_marginal_rows(lp, l, i, j, prefix)

    def _independence_rows(self, lp, l, oi, prefix_parties):
        """Marginal on prefix_parties equal across the other parties' inputs."""
        rest = [p for p in self.side_b if p not in prefix_parties]
        if not rest:
            return
        pref_in = list(itertools.product(*(range(self.sc.inputs[p]) for p in prefix_parties)))
        rest_in = list(itertools.product(*(range(self.sc.inputs[p]) for p in rest)))
        ref = rest_in[0]
        for x_pref in pref_in:
            for a_pref in itertools.product(*(range(self.sc.outputs[p]) for p in prefix_parties)):
                base = self._xb(prefix_parties, x_pref, rest, ref)
                base_entries = self._marginal_row_entries(l, oi, prefix_parties, a_pref, base)
                for other in rest_in[1:]:
                    xb = self._xb(prefix_parties, x_pref, rest, other)
                    entries = self._marginal_row_entries(l, oi, prefix_parties, a_pref, xb)
                    row = [0] * self.n_vars
                    for e in base_entries:
                        row[e] += 1
                    for e in entries:
                        row[e] -= 1
                    lp.add_eq(row, 0)
                    self.row_labels.append(("ns", l, oi, prefix_parties, x_pref, a_pref, other))

    def _equal_marginal_rows(self, lp, l, oi, oj, prefix_parties):
        rest = [p for p in self.side_b if p not in prefix_parties]
        rest_ref = tuple(0 for _ in rest)
        pref_in = list(itertools.product(*(range(self.sc.inputs[p]) for p in prefix_parties)))
        for x_pref in pref_in:
            xb = self._xb(prefix_parties, x_pref, rest, rest_ref)
            for a_pref in itertools.product(*(range(self.sc.outputs[p]) for p in prefix_parties)):
                ei = self._marginal_row_entries(l, oi, prefix_parties, a_pref, xb)
                ej = self._marginal_row_entries(l, oj, prefix_parties, a_pref, xb)
                row = [0] * self.n_vars
                for e in ei:
                    row[e] += 1
                for e in ej:
                    row[e] -= 1
                lp.add_eq(row, 0)
                self.row_labels.append(("consistency", l, oi, oj, prefix_parties, x_pref, a_pref))

    def _xb(self, prefix_parties, x_pref, rest, x_rest) -> tuple[int, ...]:
        xb = [0] * len(self.side_b)
        for p, v in zip(prefix_parties, x_pref):
            xb[self.side_b.index(p)] = v
        for p, v in zip(rest, x_rest):
            xb[self.side_b.index(p)] = v
        return tuple(xb)

    def extract(self, x: list, class_tag: str, partition: Partition, float_mode: bool) -> Decomposition:
        terms = []
        zero_tol = 1e-12 if float_mode else 0
        dtype = float if float_mode else object
        for l in range(self.n_fam):
            w = x[self.p_base + l]
            if w <= zero_tol:
                continue
            tables = {}
            for oi, order in enumerate(self.orders_b):
                shape = tuple(self.in_b) + tuple(self.out_b)
                tab = np.zeros(shape, dtype=dtype)
                for x_b in itertools.product(*(range(s) for s in self.in_b)):
                    for a_b in itertools.product(*(range(s) for s in self.out_b)):
                        tab[x_b + a_b] = x[self.q_index(l, oi, x_b, a_b)] / w
                tables[_order_key(order)] = tab
            terms.append(Term(w, dict(self.families[l]), tables))
        return Decomposition(class_tag, self.sc, partition, self.side_a, self.side_b, terms)


def _singleton_families(scenario: Scenario, side_a: tuple[int, ...], label: str = "joint"):
    return [{label: s} for s in det_strategies(side_a, scenario)]


def _pick_sides_for_scenario(
    scenario: Scenario, partition: Partition
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    partition.check_covers(scenario.parties)
    a, b = partition.group_a, partition.group_b
    if len(b) == 1 and len(a) != 1:
        a, b = b, a
    return a, b


def _pick_sides(box: Box, partition: Partition) -> tuple[tuple[int, ...], tuple[int, ...]]:
    return _pick_sides_for_scenario(box.scenario, partition)


def _lp_verdict(
    builder: _DecompositionLP,
    lp: lpmod.LinearProgram,
    class_tag: str,
    partition: Partition,
    solver_mode: str,
    tolerance: float,
) -> MembershipResult:
    res = lpmod.solve_feasibility(lp, mode=solver_mode, tolerance=tolerance)
    if res.status == lpmod.FEASIBLE:
        cert = builder.extract(res.x, class_tag, partition, solver_mode == "float")
        return MembershipResult(MEMBER, class_tag, cert, margin=res.margin)
    if res.status == lpmod.INFEASIBLE:
        cert = None
        if res.farkas is not None:
            cert = FarkasCertificate(builder.row_labels, res.farkas)
        return MembershipResult(NON_MEMBER, class_tag, cert, margin=res.margin)
    return MembershipResult(UNDECIDED, class_tag, detail=res.detail)


def _check_bilocal(
    box: Box,
    partition: Partition,
    variant: str,
    mode: str | None,
    tolerance: float,
    orders_b: list | None = None,
    families: list | None = None,
    class_tag: str | None = None,
) -> MembershipResult:
    class_tag = class_tag or variant
    side_a, side_b = _pick_sides(box, partition)
    if families is None and variant in (NSBL, TOBL) and len(side_a) != 1:
        return MembershipResult(
            UNDECIDED,
            class_tag,
            detail=f"{variant} requires a singleton side in the partition "
            f"{partition}; use check_tobl_general for grouped sides",
        )
    if families is None and variant == TOBL and len(side_b) != 2:
        return MembershipResult(
            UNDECIDED,
            class_tag,
            detail="check_tobl covers a two-party grouped side; "
            "use check_tobl_general otherwise",
        )
    if families is None:
        families = _singleton_families(box.scenario, side_a)
    n_fam = len(families)
    if orders_b is None:
        orders_b = _side_b_orders(variant, side_b)
    builder = _DecompositionLP(box.scenario, side_a, side_b, families, orders_b, variant)
    if builder.n_vars > DEFAULT_VERTEX_CAP:
        return MembershipResult(
            UNDECIDED, class_tag, detail=f"LP size {builder.n_vars} exceeds cap"
        )
    lp = builder.build(box, None)
    solver_mode = _mode_for(box, mode)
    return _lp_verdict(builder, lp, class_tag, partition, solver_mode, tolerance)


def check_bl(
    box: Box,
    partition: Partition,
    mode: str | None = None,
    tolerance: float = EPS_MEMBERSHIP,
) -> MembershipResult:
    """Svetlichny bilocality: one side enumerated over deterministic
    strategies, the other side's per-term table unconstrained beyond
    nonnegativity and per-input normalization."""
    return _check_bilocal(box, partition, BL, mode, tolerance)


def check_nsbl(
    box: Box,
    partition: Partition,
    mode: str | None = None,
    tolerance: float = EPS_MEMBERSHIP,
) -> MembershipResult:
    """Bilocality with each grouped-side table no-signalling."""
    return _check_bilocal(box, partition, NSBL, mode, tolerance)


def check_tobl(
    box: Box,
    partition: Partition,
    mode: str | None = None,
    tolerance: float = EPS_MEMBERSHIP,
    independent_weights: bool = False,
) -> MembershipResult:
    """Time-ordered bilocality: per term, one table per signalling direction,
    both sharing the term's weight and reproducing the box.

    ``independent_weights=True`` computes the relaxed variant in which each
    direction carries its own decomposition (two separate BL-style checks
    with one-way constraints)."""
    if independent_weights:
        side_a, side_b = _pick_sides(box, partition)
        if len(side_a) != 1 or len(side_b) != 2:
            return MembershipResult(UNDECIDED, TOBL, detail="tripartite form required")
        for order in itertools.permutations(side_b):
            res = _check_bilocal(
                box, partition, TOBL, mode, tolerance, orders_b=[tuple(order)]
            )
            if not res.is_member:
                return res
        return res
    return _check_bilocal(box, partition, TOBL, mode, tolerance)


def _sequential_families(scenario: Scenario, side: tuple[int, ...]):
    """Deterministic one-way families for a two-party side: for each order,
    the first party's output depends on its own input only, the second
    party's on both inputs; the two orders are unconstrained between them."""
    per_order = {}
    for order in itertools.permutations(side):
        p1, p2 = order
        first_maps = list(
            itertools.product(range(scenario.outputs[p1]), repeat=scenario.inputs[p1])
        )
        second_maps = list(
            itertools.product(
                range(scenario.outputs[p2]),
                repeat=scenario.inputs[p1] * scenario.inputs[p2],
            )
        )
        strats = []
        in_sizes = [scenario.inputs[p] for p in side]
        for f, g in itertools.product(first_maps, second_maps):
            outputs = []
            for xi in range(math.prod(in_sizes)):
                x = _unflat(xi, in_sizes)
                x_by_party = dict(zip(side, x))
                a1 = f[x_by_party[p1]]
                a2 = g[_flat((x_by_party[p1], x_by_party[p2]), (scenario.inputs[p1], scenario.inputs[p2]))]
                a_by_party = {p1: a1, p2: a2}
                outputs.append(tuple(a_by_party[p] for p in side))
            strats.append(DeterministicStrategy(side, tuple(outputs)))
        per_order[_perm_label(order)] = strats
    labels = list(per_order.keys())
    return [
        {labels[0]: s0, labels[1]: s1}
        for s0, s1 in itertools.product(per_order[labels[0]], per_order[labels[1]])
    ]


def check_tobl_general(
    box: Box,
    partition: Partition,
    mode: str | None = None,
    tolerance: float = EPS_MEMBERSHIP,
) -> MembershipResult:
    """Grouped time-ordered bilocality (arbitrary bipartition): per term and
    per group, one sequential table per party ordering, with prefix
    marginals independent of later inputs and consistent across orderings
    that agree on a prefix."""
    partition.check_covers(box.scenario.parties)
    a, b = partition.group_a, partition.group_b
    # enumerate the smaller side, preferring a singleton
    if (len(b), b) < (len(a), a):
        a, b = b, a
    if len(b) > 3:
        return MembershipResult(
            UNDECIDED, GROUPED_TOBL, detail=f"scale: group size {len(b)} > 3 refused"
        )
    if len(a) > 2:
        return MembershipResult(
            UNDECIDED, GROUPED_TOBL, detail=f"scale: enumerated group size {len(a)} > 2"
        )
    if len(a) == 1:
        families = _singleton_families(box.scenario, a)
    else:
        solver_mode = _mode_for(box, mode)
        if solver_mode == "exact":
            return MembershipResult(
                UNDECIDED,
                GROUPED_TOBL,
                detail="scale: exact mode with two grouped sides refused; "
                "use float mode",
            )
        families = _sequential_families(box.scenario, a)
    orders_b = [tuple(p) for p in itertools.permutations(b)]
    if len(families) > 256:
        return _check_grouped_sparse(box, a, b, families, orders_b, partition, tolerance)
    return _check_bilocal(
        box,
        partition,
        TOBL,
        mode,
        tolerance,
        orders_b=orders_b,
        families=families,
        class_tag=GROUPED_TOBL,
    )


def _check_grouped_sparse(
    box: Box,
    side_a: tuple[int, ...],
    side_b: tuple[int, ...],
    families: list,
    orders_b: list,
    partition: Partition,
    tolerance: float,
) -> MembershipResult:
    """Float-mode sparse path for large enumerated sides (both groups >= 2)."""
    from scipy import sparse
    from scipy.optimize import linprog

    builder = _DecompositionLP(box.scenario, side_a, side_b, families, orders_b, TOBL)
    sc = box.scenario
    rows, cols, vals, rhs = [], [], [], []
    nrow = 0

    def emit(entries: dict[int, float], b: float):
        nonlocal nrow
        for c, v in entries.items():
            rows.append(nrow)
            cols.append(c)
            vals.append(v)
        rhs.append(b)
        nrow += 1

    order_a_labels = list(families[0].keys())
    in_a = builder.in_a
    # group families by their answer for each (order_a, x_a, a_a) once
    tabf = box.float_table()
    for oa in order_a_labels:
        for oi in range(len(orders_b)):
            for x in sc.joint_inputs():
                x_a = tuple(x[p] for p in side_a)
                xa_flat = _flat(x_a, in_a)
                x_b = tuple(x[p] for p in side_b)
                by_aa: dict[tuple, list[int]] = {}
                for l, fam in enumerate(families):
                    by_aa.setdefault(fam[oa](xa_flat), []).append(l)
                for a in sc.joint_outputs():
                    a_a = tuple(a[p] for p in side_a)
                    a_b = tuple(a[p] for p in side_b)
                    ent = {
                        builder.q_index(l, oi, x_b, a_b): 1.0
                        for l in by_aa.get(a_a, ())
                    }
                    emit(ent, float(tabf[x + a]))
    for l in range(len(families)):
        for oi in range(len(orders_b)):
            for x_b in itertools.product(*(range(s) for s in builder.in_b)):
                ent = {
                    builder.q_index(l, oi, x_b, a_b): 1.0
                    for a_b in itertools.product(*(range(s) for s in builder.out_b))
                }
                ent[builder.p_base + l] = -1.0
                emit(ent, 0.0)
        # one-way rows per order (two-party side: first party's marginal
        # independent of the second's input)
        for oi, order in enumerate(orders_b):
            for mlen in range(1, len(side_b)):
                prefix = tuple(order[:mlen])
                rest = [p for p in side_b if p not in prefix]
                rest_in = list(itertools.product(*(range(sc.inputs[p]) for p in rest)))
                for x_pref in itertools.product(*(range(sc.inputs[p]) for p in prefix)):
                    for a_pref in itertools.product(*(range(sc.outputs[p]) for p in prefix)):
                        base = builder._xb(prefix, x_pref, rest, rest_in[0])
                        e0 = builder._marginal_row_entries(l, oi, prefix, a_pref, base)
                        for other in rest_in[1:]:
                            xb = builder._xb(prefix, x_pref, rest, other)
                            e1 = builder._marginal_row_entries(l, oi, prefix, a_pref, xb)
                            ent: dict[int, float] = {}
                            for e in e0:
                                ent[e] = ent.get(e, 0.0) + 1.0
                            for e in e1:
                                ent[e] = ent.get(e, 0.0) - 1.0
                            emit(ent, 0.0)
    ent = {builder.p_base + l: 1.0 for l in range(len(families))}
    emit(ent, 1.0)
    A = sparse.coo_matrix((vals, (rows, cols)), shape=(nrow, builder.n_vars)).tocsr()
    b = np.array(rhs)
    res = linprog(
        np.zeros(builder.n_vars), A_eq=A, b_eq=b, bounds=(0, None), method="highs"
    )
    if res.status == 0:
        margin = float(np.max(np.abs(A @ res.x - b)))
        cert = builder.extract(list(res.x), GROUPED_TOBL, partition, True)
        return MembershipResult(MEMBER, GROUPED_TOBL, cert, margin=margin)
    if res.status == 2:
        return MembershipResult(NON_MEMBER, GROUPED_TOBL, margin=None, detail=res.message)
    return MembershipResult(UNDECIDED, GROUPED_TOBL, detail=res.message)


# ---------------------------------------------------------------------------
# certificate verification and auditing
# ---------------------------------------------------------------------------


def reconstruct(decomp: Decomposition) -> dict[str, Box]:
    """Re-multiply a decomposition into one box per order pair."""
    sc = decomp.scenario
    if decomp.class_tag == LOCAL:
        tab = np.zeros(sc.table_shape, dtype=object)
        for term in decomp.terms:
            for x in sc.joint_inputs():
                a = tuple(term.strategies[str(i)](x[i])[0] for i in range(sc.parties))
                tab[x + a] += term.weight
        mode = FLOAT if isinstance(decomp.terms[0].weight, float) else RATIONAL
        return {"joint": Box(sc, tab.astype(float) if mode == FLOAT else tab, mode)}
    side_a, side_b = decomp.side_a, decomp.side_b
    in_a = [sc.inputs[p] for p in side_a]
    out = {}
    a_labels = list(decomp.terms[0].strategies.keys())
    b_labels = list(decomp.terms[0].tables.keys())
    float_mode = isinstance(decomp.terms[0].weight, float)
    for la in a_labels:
        for lb in b_labels:
            tab = np.zeros(sc.table_shape, dtype=float if float_mode else object)
            if not float_mode:
                tab[...] = Fraction(0)
            for term in decomp.terms:
                strat = term.strategies[la]
                table = term.tables[lb]
                for x in sc.joint_inputs():
                    x_a = tuple(x[p] for p in side_a)
                    a_a = strat(_flat(x_a, in_a))
                    x_b = tuple(x[p] for p in side_b)
                    for a_b in itertools.product(*(range(sc.outputs[p]) for p in side_b)):
                        a = [0] * sc.parties
                        for k, p in enumerate(side_a):
                            a[p] = a_a[k]
                        for k, p in enumerate(side_b):
                            a[p] = a_b[k]
                        tab[x + tuple(a)] += term.weight * table[x_b + a_b]
            key = lb if len(a_labels) == 1 else f"{la}|{lb}"
            out[key] = Box(sc, tab, FLOAT if float_mode else RATIONAL)
    return out


def reconstruction_residual(decomp: Decomposition, box: Box) -> float:
    """Max entrywise deviation of every reconstructed order pair from the box."""
    target = box.float_table()
    worst = 0.0
    for rec in reconstruct(decomp).values():
        worst = max(worst, float(np.max(np.abs(rec.float_table() - target))))
    return worst


def verify_farkas(cert: FarkasCertificate, lp: lpmod.LinearProgram) -> bool:
    """Re-check a Farkas certificate against the LP it was produced for."""
    y = [Fraction(v) for v in cert.multipliers]
    std = lpmod._Standardized(lp)
    y_std = [s * v for s, v in zip(std.row_signs, y)]
    try:
        lpmod._verify_farkas(std, y_std)
    except lpmod.CertificateError:
        return False
    return True


def _table_signalling(table: np.ndarray, in_sizes, out_sizes, tol: float) -> tuple[bool, bool]:
    """(first signals to second, second signals to first) for a 2-party table."""
    tab = np.asarray(table, dtype=float)
    shape = tuple(in_sizes) + tuple(out_sizes)
    tab = tab.reshape(shape)
    marg_first = tab.sum(axis=3)  # over a2 -> (x1, x2, a1)
    second_to_first = float(np.max(marg_first.max(axis=1) - marg_first.min(axis=1))) > tol
    marg_second = tab.sum(axis=2)  # over a1 -> (x1, x2, a2)
    first_to_second = float(np.max(marg_second.max(axis=0) - marg_second.min(axis=0))) > tol
    return first_to_second, second_to_first


@dataclass
class SignallingAudit:
    term_directions: list[str]
    has_two_way_term: bool
    requires_two_way: bool


def classify_bl_certificate(
    cert: Decomposition, tolerance: float = EPS_MEMBERSHIP
) -> SignallingAudit:
    """Tag each BL term's grouped table by its signalling direction and decide
    whether the decomposed box genuinely needs two-way terms (by re-running
    the time-ordered check on the reconstructed box)."""
    if cert.class_tag != BL:
        raise BoxError(f"expected a BL certificate, got {cert.class_tag}")
    if len(cert.side_b) != 2:
        raise BoxError("signalling audit needs a two-party grouped side")
    u, v = cert.side_b
    in_sizes = [cert.scenario.inputs[p] for p in (u, v)]
    out_sizes = [cert.scenario.outputs[p] for p in (u, v)]
    tags = []
    for term in cert.terms:
        fwd, bwd = _table_signalling(term.tables["joint"], in_sizes, out_sizes, tolerance)
        if fwd and bwd:
            tags.append("both")
        elif fwd:
            tags.append(f"{u + 1}->{v + 1}")
        elif bwd:
            tags.append(f"{u + 1}<-{v + 1}")
        else:
            tags.append("none")
    box = reconstruct(cert)["joint"]
    tobl = check_tobl(box, cert.partition, tolerance=tolerance)
    requires_two_way = tobl.verdict == NON_MEMBER
    return SignallingAudit(tags, "both" in tags, requires_two_way)


def inclusion_chain(box: Box, partition: Partition, mode: str | None = None,
                    tolerance: float = EPS_MEMBERSHIP) -> dict[str, MembershipResult]:
    """Run every class check once; callers assert the inclusion ordering."""
    return {
        LOCAL: check_local(box, mode=mode, tolerance=tolerance),
        NSBL: check_nsbl(box, partition, mode=mode, tolerance=tolerance),
        TOBL: check_tobl(box, partition, mode=mode, tolerance=tolerance),
        BL: check_bl(box, partition, mode=mode, tolerance=tolerance),
    }
