"""Core data model: scenarios, boxes, partitions, relabelings and the
structural operations on them (validation, no-signalling, marginals,
mixing, tensoring).

Index convention (shared by every module): a box table is a dense array of
shape ``(x_1, ..., x_N, a_1, ..., a_N)`` in row-major order, i.e. all input
axes first, then all output axes.  Binary observables with outcomes +/-1 are
mapped to indices via +1 -> 0, -1 -> 1.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

EPS_VALIDATION = 1e-12
EPS_MEMBERSHIP = 1e-9
DEFAULT_SIZE_CAP = 10_000_000

RATIONAL = "rational"
FLOAT = "float"


class BoxError(ValueError):
    """Structural error in a box or an operation on boxes."""


class ModeMismatchError(BoxError):
    """Operation mixing exact-rational and float boxes."""


class SignallingError(BoxError):
    """Operation requiring a no-signalling box received a signalling one."""


@dataclass(frozen=True)
class Scenario:
    """Party count with per-party input and output alphabet sizes."""

    inputs: tuple[int, ...]
    outputs: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(int(v) for v in self.inputs))
        object.__setattr__(self, "outputs", tuple(int(v) for v in self.outputs))
        if len(self.inputs) != len(self.outputs):
            raise BoxError("inputs and outputs must list the same number of parties")
        if len(self.inputs) < 1:
            raise BoxError("a scenario needs at least one party")
        if any(v < 1 for v in self.inputs + self.outputs):
            raise BoxError("alphabet sizes must be >= 1")
        if self.table_size > DEFAULT_SIZE_CAP:
            raise BoxError(
                f"table size {self.table_size} exceeds cap {DEFAULT_SIZE_CAP}"
            )

    @property
    def parties(self) -> int:
        return len(self.inputs)

    @property
    def table_shape(self) -> tuple[int, ...]:
        return self.inputs + self.outputs

    @property
    def table_size(self) -> int:
        return math.prod(self.inputs) * math.prod(self.outputs)

    def joint_inputs(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(*(range(v) for v in self.inputs))

    def joint_outputs(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(*(range(v) for v in self.outputs))


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Box:
    """Conditional probability table P(a_1..a_N | x_1..x_N) over a Scenario.

    One numeric mode per box: ``"rational"`` tables hold Fraction entries in
    an object array, ``"float"`` tables are binary64.  Tables are frozen at
    construction; no operation mutates its inputs.
    """

    scenario: Scenario
    table: np.ndarray
    mode: str

    def __post_init__(self):
        if self.mode not in (RATIONAL, FLOAT):
            raise BoxError(f"unknown numeric mode {self.mode!r}")
        tab = np.asarray(self.table)
        if tab.shape != self.scenario.table_shape:
            raise BoxError(
                f"table shape {tab.shape} does not match "
                f"scenario shape {self.scenario.table_shape}"
            )
        if self.mode == FLOAT:
            tab = tab.astype(np.float64, copy=True)
        else:
            flat = [Fraction(v) for v in tab.ravel()]
            tab = np.empty(tab.shape, dtype=object)
            tab.ravel()[:] = flat
        object.__setattr__(self, "table", _freeze(tab))

    @classmethod
    def from_table(cls, scenario: Scenario, table, mode: str = FLOAT) -> "Box":
        return cls(scenario, np.asarray(table).reshape(scenario.table_shape), mode)

    @classmethod
    def uniform(cls, scenario: Scenario, mode: str = FLOAT) -> "Box":
        n_out = math.prod(scenario.outputs)
        if mode == RATIONAL:
            tab = np.full(scenario.table_shape, Fraction(1, n_out), dtype=object)
        else:
            tab = np.full(scenario.table_shape, 1.0 / n_out)
        return cls(scenario, tab, mode)

    @classmethod
    def deterministic(
        cls, scenario: Scenario, strategy: Sequence[Sequence[int]], mode: str = FLOAT
    ) -> "Box":
        """Product of per-party deterministic strategies a_i = strategy[i][x_i]."""
        tab = np.zeros(scenario.table_shape, dtype=object if mode == RATIONAL else float)
        one = Fraction(1) if mode == RATIONAL else 1.0
        for x in scenario.joint_inputs():
            a = tuple(strategy[i][x[i]] for i in range(scenario.parties))
            tab[x + a] = one
        return cls(scenario, tab, mode)

    def prob(self, a: Sequence[int], x: Sequence[int]):
        return self.table[tuple(x) + tuple(a)]

    def as_float(self) -> "Box":
        if self.mode == FLOAT:
            return self
        return Box(self.scenario, self.table.astype(np.float64), FLOAT)

    def float_table(self) -> np.ndarray:
        return self.table.astype(np.float64) if self.mode == RATIONAL else self.table


@dataclass(frozen=True)
class Partition:
    """A bipartition of the parties into two disjoint, covering groups."""

    group_a: tuple[int, ...]
    group_b: tuple[int, ...]

    def __post_init__(self):
        a = tuple(sorted(int(i) for i in self.group_a))
        b = tuple(sorted(int(i) for i in self.group_b))
        object.__setattr__(self, "group_a", a)
        object.__setattr__(self, "group_b", b)
        if not a or not b:
            raise BoxError("both groups must be nonempty")
        if set(a) & set(b):
            raise BoxError("groups must be disjoint")

    def check_covers(self, parties: int):
        if set(self.group_a) | set(self.group_b) != set(range(parties)):
            raise BoxError(
                f"partition {self.group_a}|{self.group_b} does not cover "
                f"all {parties} parties"
            )

    @classmethod
    def parse(cls, text: str) -> "Partition":
        """Parse ``"1|2,3"`` (1-based party labels) into a 0-based Partition."""
        sides = text.split("|")
        if len(sides) != 2:
            raise BoxError(f"cannot parse partition {text!r}")
        groups = []
        for side in sides:
            try:
                groups.append(tuple(int(t) - 1 for t in side.split(",") if t.strip()))
            except ValueError as exc:
                raise BoxError(f"cannot parse partition {text!r}") from exc
        return cls(groups[0], groups[1])

    def __str__(self) -> str:
        fmt = lambda g: ",".join(str(i + 1) for i in g)
        return f"{fmt(self.group_a)}|{fmt(self.group_b)}"


def _identity_perm(n: int) -> tuple[int, ...]:
    return tuple(range(n))


def _check_perm(p: Sequence[int], n: int, what: str):
    if sorted(p) != list(range(n)):
        raise BoxError(f"{what} {tuple(p)} is not a permutation of 0..{n - 1}")


@dataclass(frozen=True)
class Relabeling:
    """Per-party input permutation, per-party per-input output permutation,
    and an optional party permutation.

    Gather semantics: the relabeled box B' satisfies
    ``B'(a'|x') = B(a|x)`` with ``x_i = input_maps[i][x'_i]`` and
    ``a_i = output_maps[i][x'_i][a'_i]`` (after the party permutation, under
    which new party j is old party ``party_perm[j]``).
    """

    input_maps: tuple[tuple[int, ...], ...]
    output_maps: tuple[tuple[tuple[int, ...], ...], ...]
    party_perm: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "input_maps", tuple(tuple(m) for m in self.input_maps)
        )
        object.__setattr__(
            self,
            "output_maps",
            tuple(tuple(tuple(p) for p in m) for m in self.output_maps),
        )
        if self.party_perm is not None:
            object.__setattr__(self, "party_perm", tuple(self.party_perm))

    @classmethod
    def identity(cls, scenario: Scenario) -> "Relabeling":
        return cls(
            tuple(_identity_perm(n) for n in scenario.inputs),
            tuple(
                tuple(_identity_perm(scenario.outputs[i]) for _ in range(scenario.inputs[i]))
                for i in range(scenario.parties)
            ),
        )

    @classmethod
    def output_flip(cls, scenario: Scenario, party: int, at_input: int) -> "Relabeling":
        """Swap the two outputs of one binary party at one of its inputs."""
        if scenario.outputs[party] != 2:
            raise BoxError("output_flip needs a binary output alphabet")
        r = cls.identity(scenario)
        out = list(list(p) for p in r.output_maps[party])
        out[at_input] = [1, 0]
        maps = list(r.output_maps)
        maps[party] = tuple(tuple(p) for p in out)
        return cls(r.input_maps, tuple(maps), None)

    def validate_for(self, scenario: Scenario):
        n = scenario.parties
        if len(self.input_maps) != n or len(self.output_maps) != n:
            raise BoxError("relabeling party count does not match scenario")
        if self.party_perm is not None:
            _check_perm(self.party_perm, n, "party permutation")
            for j, old in enumerate(self.party_perm):
                if (
                    scenario.inputs[old] != scenario.inputs[j]
                    or scenario.outputs[old] != scenario.outputs[j]
                ):
                    raise BoxError("party permutation must preserve alphabet sizes")
        for i in range(n):
            _check_perm(self.input_maps[i], scenario.inputs[i], f"input map of party {i}")
            if len(self.output_maps[i]) != scenario.inputs[i]:
                raise BoxError(f"party {i} needs one output map per input")
            for p in self.output_maps[i]:
                _check_perm(p, scenario.outputs[i], f"output map of party {i}")

    def inverse(self) -> "Relabeling":
        inv_inputs = []
        inv_outputs = []
        n = len(self.input_maps)
        perm = self.party_perm or _identity_perm(n)
        inv_perm = tuple(perm.index(j) for j in range(n))
        for j in range(n):
            # new party j of the inverse is old party inv_perm[j] of self's output,
            # i.e. it undoes self's party perm; its maps invert self's maps for
            # the original party j.
            i = j
            sigma = self.input_maps[i]
            inv_sigma = tuple(sigma.index(x) for x in range(len(sigma)))
            inv_inputs.append(inv_sigma)
            taus = self.output_maps[i]
            inv_taus = []
            for x_new in range(len(sigma)):
                tau = taus[inv_sigma[x_new]]
                inv_taus.append(tuple(tau.index(a) for a in range(len(tau))))
            inv_outputs.append(tuple(inv_taus))
        if self.party_perm is None:
            return Relabeling(tuple(inv_inputs), tuple(inv_outputs), None)
        # conjugate the per-party maps by the party permutation: the inverse's
        # slot j undoes what self applied at slot inv_perm[j]
        ordered_in = tuple(inv_inputs[inv_perm[j]] for j in range(n))
        ordered_out = tuple(inv_outputs[inv_perm[j]] for j in range(n))
        return Relabeling(ordered_in, ordered_out, inv_perm)


@dataclass(frozen=True)
class ValidationReport:
    normalization_residuals: dict[tuple[int, ...], float]
    max_residual: float
    most_negative: float
    valid: bool


@dataclass(frozen=True)
class NoSignallingReport:
    max_discrepancy: float
    worst_subset: tuple[int, ...] | None
    tolerance: float
    passed: bool


def validate_box(box: Box, eps: float = EPS_VALIDATION) -> ValidationReport:
    """Per-input normalization residuals and the most negative entry."""
    out_axes = tuple(range(box.scenario.parties, 2 * box.scenario.parties))
    sums = box.table.sum(axis=out_axes)
    residuals = {}
    max_residual = 0.0
    for x in box.scenario.joint_inputs():
        r = abs(float(sums[x]) - 1.0)
        residuals[x] = r
        max_residual = max(max_residual, r)
    most_negative = float(min(box.table.min(), 0))
    valid = max_residual <= eps and most_negative >= -eps
    return ValidationReport(residuals, max_residual, most_negative, valid)


def is_no_signalling(box: Box, tolerance: float = EPS_VALIDATION) -> NoSignallingReport:
    """Check that the marginal on every proper party subset is independent of
    the complementary parties' inputs; report the worst discrepancy."""
    n = box.scenario.parties
    worst = 0.0
    worst_subset = None
    for r in range(1, n):
        for keep in itertools.combinations(range(n), r):
            comp = tuple(i for i in range(n) if i not in keep)
            comp_out_axes = tuple(n + i for i in comp)
            marg = box.table.sum(axis=comp_out_axes)
            # remaining axes: all inputs, then outputs of `keep`
            comp_in_axes = tuple(comp)
            hi = marg.max(axis=comp_in_axes)
            lo = marg.min(axis=comp_in_axes)
            disc = float((hi - lo).max())
            if disc > worst:
                worst = disc
                worst_subset = keep
    return NoSignallingReport(worst, worst_subset, tolerance, worst <= tolerance)


def marginal(box: Box, keep: Sequence[int], tolerance: float = EPS_VALIDATION) -> Box:
    """Marginal box on the kept parties; refuses signalling boxes since the
    result would depend on the discarded parties' inputs."""
    keep = tuple(sorted(set(int(i) for i in keep)))
    n = box.scenario.parties
    if not keep or any(i < 0 or i >= n for i in keep):
        raise BoxError(f"invalid party set {keep}")
    report = is_no_signalling(box, tolerance)
    if not report.passed:
        raise SignallingError(
            f"marginal refused: signalling discrepancy {report.max_discrepancy:.3e} "
            f"exceeds tolerance {tolerance:.3e}"
        )
    comp = tuple(i for i in range(n) if i not in keep)
    tab = box.table
    # fix discarded inputs at 0, then sum the discarded outputs
    idx = [slice(None)] * (2 * n)
    for i in comp:
        idx[i] = 0
    tab = tab[tuple(idx)]
    kept_parties = len(keep)
    tab = tab.sum(axis=tuple(kept_parties + i for i in comp))
    # axis bookkeeping: after slicing, axes are inputs(keep) then outputs in
    # original order; discarded output axis positions follow the kept inputs.
    sub = Scenario(
        tuple(box.scenario.inputs[i] for i in keep),
        tuple(box.scenario.outputs[i] for i in keep),
    )
    return Box(sub, tab, box.mode)


def mix(boxes: Sequence[Box], weights: Sequence) -> Box:
    """Entrywise convex combination of boxes on a common scenario."""
    if not boxes:
        raise BoxError("mix needs at least one box")
    if len(boxes) != len(weights):
        raise BoxError("one weight per box required")
    first = boxes[0]
    for b in boxes[1:]:
        if b.scenario != first.scenario:
            raise BoxError("mix requires a common scenario")
        if b.mode != first.mode:
            raise ModeMismatchError("mix requires a common numeric mode")
    if first.mode == RATIONAL:
        ws = [Fraction(w) for w in weights]
        if any(w < 0 for w in ws) or sum(ws) != 1:
            raise BoxError("weights must be nonnegative and sum to 1 exactly")
        tab = sum((w * b.table for w, b in zip(ws, boxes)), np.zeros(first.table.shape, dtype=object))
    else:
        ws = [float(w) for w in weights]
        if any(w < -EPS_VALIDATION for w in ws) or abs(sum(ws) - 1.0) > EPS_VALIDATION:
            raise BoxError("weights must be nonnegative and sum to 1")
        tab = sum(w * b.table for w, b in zip(ws, boxes))
    return Box(first.scenario, tab, first.mode)


def relabel(box: Box, r: Relabeling) -> Box:
    """Apply a relabeling; invertible via ``r.inverse()``."""
    r.validate_for(box.scenario)
    n = box.scenario.parties
    tab = box.table
    if r.party_perm is not None:
        axes = tuple(r.party_perm) + tuple(n + i for i in r.party_perm)
        tab = np.transpose(tab, axes)
    for i in range(n):
        tab = np.take(tab, r.input_maps[i], axis=i)
    tab = np.array(tab, dtype=tab.dtype)
    for i in range(n):
        maps = r.output_maps[i]
        if all(m == _identity_perm(box.scenario.outputs[i]) for m in maps):
            continue
        new_tab = tab.copy()
        for x in range(box.scenario.inputs[i]):
            sl = [slice(None)] * (2 * n)
            sl[i] = x
            sub = tab[tuple(sl)]
            # output axis n+i shifts down by one after fixing input axis i
            new_tab[tuple(sl)] = np.take(sub, maps[x], axis=n + i - 1)
        tab = new_tab
    return Box(box.scenario, tab, box.mode)


def tensor(box_a: Box, box_b: Box) -> Box:
    """Independent boxes side by side on the concatenated scenario."""
    if box_a.mode != box_b.mode:
        raise ModeMismatchError("tensor requires matching numeric modes")
    sc = Scenario(
        box_a.scenario.inputs + box_b.scenario.inputs,
        box_a.scenario.outputs + box_b.scenario.outputs,
    )
    na, nb = box_a.scenario.parties, box_b.scenario.parties
    prod = np.multiply.outer(box_a.table, box_b.table)
    # axes: xA aA xB aB  ->  xA xB aA aB
    axes = (
        tuple(range(na))
        + tuple(2 * na + i for i in range(nb))
        + tuple(na + i for i in range(na))
        + tuple(2 * na + nb + i for i in range(nb))
    )
    return Box(sc, np.transpose(prod, axes), box_a.mode)


def rationalize(box: Box, tolerance: float = 1e-10) -> tuple[Box, float]:
    """Round a float box to exact rationals via continued fractions, then
    renormalize each input row exactly.

    Returns the rational box and the max absolute rounding residual against
    the original entries.  Verdicts obtained on the rationalized box only
    apply to the original up to this residual.
    """
    if box.mode == RATIONAL:
        return box, 0.0
    flat = []
    for v in box.table.ravel():
        f = Fraction(float(v))
        for bound in (10, 100, 10_000, 1_000_000, 10**8, 10**10, 10**12):
            cand = f.limit_denominator(bound)
            if abs(float(cand) - float(v)) <= tolerance:
                f = cand
                break
        flat.append(f)
    tab = np.empty(box.table.shape, dtype=object)
    tab.ravel()[:] = flat
    n = box.scenario.parties
    out_axes = tuple(range(n, 2 * n))
    for x in box.scenario.joint_inputs():
        s = tab[x].sum()
        if s == 0:
            raise BoxError("cannot renormalize an all-zero input row")
        tab[x] = tab[x] / s
    residual = float(np.max(np.abs(tab.astype(np.float64) - box.table)))
    return Box(box.scenario, tab, RATIONAL), residual
