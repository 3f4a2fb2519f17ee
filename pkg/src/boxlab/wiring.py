"""WCCPI protocol engine: preparation-phase steps (postselection with
broadcast-conditioned relabelings, branch mixing) and measurement-phase
sequential wirings that merge a group of parties into one effective party.

Sequential semantics: the effective box is the direct sum over group-output
assignments consistent with the adaptive plan, with each later party's input
substituted per the plan.  This is well-defined for any no-signalling box;
signalling boxes are refused rather than given an arbitrary time-ordering.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .model import (
    EPS_VALIDATION,
    FLOAT,
    RATIONAL,
    Box,
    BoxError,
    Relabeling,
    Scenario,
    SignallingError,
    is_no_signalling,
    mix,
    relabel,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class WiringPlan:
    """Adaptive plan for one effective input: measurement order over the
    group, per step a map from previously observed outputs to the input fed,
    and a final map from all group outputs (in measurement order) to the
    effective output."""

    order: tuple[int, ...]
    input_steps: tuple[dict, ...]  # step k: {outputs of order[:k] -> input}
    output_map: dict  # {outputs of order -> effective output}


@dataclass(frozen=True)
class SequentialWiring:
    group: tuple[int, ...]
    n_effective_inputs: int
    n_effective_outputs: int
    plans: tuple[WiringPlan, ...]  # one per effective input

    def __post_init__(self):
        object.__setattr__(self, "group", tuple(sorted(self.group)))
        if len(self.plans) != self.n_effective_inputs:
            raise BoxError("one plan per effective input required")

    def validate_for(self, scenario: Scenario):
        for p in self.group:
            if p < 0 or p >= scenario.parties:
                raise BoxError(f"group party {p} out of range")
        for plan in self.plans:
            if sorted(plan.order) != list(self.group):
                raise BoxError("plan order must measure each group party exactly once")
            out_sizes = [scenario.outputs[p] for p in plan.order]
            for k, step in enumerate(plan.input_steps):
                for hist in itertools.product(*(range(s) for s in out_sizes[:k])):
                    if hist not in step:
                        raise BoxError(f"input plan at step {k} misses history {hist}")
                    v = step[hist]
                    if not 0 <= v < scenario.inputs[plan.order[k]]:
                        raise BoxError(f"input {v} out of range for party {plan.order[k]}")
            for hist in itertools.product(*(range(s) for s in out_sizes)):
                if hist not in plan.output_map:
                    raise BoxError(f"output map misses history {hist}")
                if not 0 <= plan.output_map[hist] < self.n_effective_outputs:
                    raise BoxError("effective output out of range")

    @classmethod
    def identity(cls, scenario: Scenario, party: int) -> "SequentialWiring":
        plans = []
        for x in range(scenario.inputs[party]):
            plans.append(
                WiringPlan(
                    (party,),
                    ({(): x},),
                    {(a,): a for a in range(scenario.outputs[party])},
                )
            )
        return cls((party,), scenario.inputs[party], scenario.outputs[party], tuple(plans))


def effective_scenario(scenario: Scenario, w: SequentialWiring) -> tuple[Scenario, int]:
    """Scenario after merging the group; the effective party sits at the slot
    of the lowest group index.  Returns (scenario, effective party slot)."""
    rest = [p for p in range(scenario.parties) if p not in w.group]
    slot_order = sorted(rest + [w.group[0]])
    pos = slot_order.index(w.group[0])
    inputs, outputs = [], []
    for p in slot_order:
        if p == w.group[0]:
            inputs.append(w.n_effective_inputs)
            outputs.append(w.n_effective_outputs)
        else:
            inputs.append(scenario.inputs[p])
            outputs.append(scenario.outputs[p])
    return Scenario(tuple(inputs), tuple(outputs)), pos


def _group_inputs_for(plan: WiringPlan, a_ordered: tuple[int, ...]) -> dict[int, int]:
    """Inputs fed to each group party when the measured outputs (in plan
    order) are a_ordered."""
    x = {}
    for k, party in enumerate(plan.order):
        x[party] = plan.input_steps[k][a_ordered[:k]]
    return x


def apply_sequential_wiring(
    box: Box, w: SequentialWiring, tolerance: float = EPS_VALIDATION
) -> Box:
    w.validate_for(box.scenario)
    report = is_no_signalling(box, tolerance)
    if not report.passed:
        raise SignallingError(
            f"wiring refused: signalling discrepancy {report.max_discrepancy:.3e}"
        )
    sc = box.scenario
    new_sc, pos = effective_scenario(sc, w)
    rest = [p for p in range(sc.parties) if p not in w.group]
    tab = np.zeros(new_sc.table_shape, dtype=float if box.mode == FLOAT else object)
    if box.mode == RATIONAL:
        from fractions import Fraction

        tab[...] = Fraction(0)
    n_new = new_sc.parties
    for x_new in new_sc.joint_inputs():
        x_eff = x_new[pos]
        plan = w.plans[x_eff]
        x_rest = [v for i, v in enumerate(x_new) if i != pos]
        for a_ordered in itertools.product(*(range(sc.outputs[p]) for p in plan.order)):
            x_group = _group_inputs_for(plan, a_ordered)
            a_eff = plan.output_map[a_ordered]
            x_old = [0] * sc.parties
            for p, v in zip(rest, x_rest):
                x_old[p] = v
            for p, v in x_group.items():
                x_old[p] = v
            a_by_party = dict(zip(plan.order, a_ordered))
            for a_rest in itertools.product(*(range(sc.outputs[p]) for p in rest)):
                a_old = [0] * sc.parties
                for p, v in zip(rest, a_rest):
                    a_old[p] = v
                for p, v in a_by_party.items():
                    a_old[p] = v
                a_new = list(a_rest)
                a_new.insert(pos, a_eff)
                tab[tuple(x_new) + tuple(a_new)] += box.table[
                    tuple(x_old) + tuple(a_old)
                ]
    return Box(new_sc, tab, box.mode)


def wiring_matrix(scenario: Scenario, w: SequentialWiring) -> np.ndarray:
    """Linear map from vec(box table) to vec(effective table); independent
    fast route for batch application and duplicate detection."""
    w.validate_for(scenario)
    new_sc, pos = effective_scenario(scenario, w)
    rest = [p for p in range(scenario.parties) if p not in w.group]
    M = np.zeros((new_sc.table_size, scenario.table_size), dtype=np.int8)
    old_sizes = scenario.table_shape
    new_sizes = new_sc.table_shape
    for x_new in new_sc.joint_inputs():
        x_eff = x_new[pos]
        plan = w.plans[x_eff]
        x_rest = [v for i, v in enumerate(x_new) if i != pos]
        for a_ordered in itertools.product(*(range(scenario.outputs[p]) for p in plan.order)):
            x_group = _group_inputs_for(plan, a_ordered)
            a_eff = plan.output_map[a_ordered]
            x_old = [0] * scenario.parties
            for p, v in zip(rest, x_rest):
                x_old[p] = v
            for p, v in x_group.items():
                x_old[p] = v
            a_by_party = dict(zip(plan.order, a_ordered))
            for a_rest in itertools.product(*(range(scenario.outputs[p]) for p in rest)):
                a_old = [0] * scenario.parties
                for p, v in zip(rest, a_rest):
                    a_old[p] = v
                for p, v in a_by_party.items():
                    a_old[p] = v
                a_new = list(a_rest)
                a_new.insert(pos, a_eff)
                row = _ravel(tuple(x_new) + tuple(a_new), new_sizes)
                col = _ravel(tuple(x_old) + tuple(a_old), old_sizes)
                M[row, col] += 1
    return M


def _ravel(idx: tuple[int, ...], sizes: tuple[int, ...]) -> int:
    flat = 0
    for v, s in zip(idx, sizes):
        flat = flat * s + v
    return flat


def postselect(
    box: Box, party: int, input_value: int, outcome: int, tolerance: float = EPS_VALIDATION
) -> tuple[Box, object]:
    """Condition on one party observing `outcome` at `input_value`, drop the
    party, renormalize; returns (conditional box, branch probability)."""
    sc = box.scenario
    if not 0 <= party < sc.parties:
        raise BoxError(f"party {party} out of range")
    report = is_no_signalling(box, tolerance)
    if not report.passed:
        raise SignallingError("postselection refused on a signalling box")
    rest = [p for p in range(sc.parties) if p != party]
    # branch probability from the party's marginal (input-independent by NS)
    idx = [0] * sc.parties
    idx[party] = input_value
    sub = box.table[tuple(idx)]  # remaining axes: output axes in party order
    prob = sub.sum(axis=tuple(i for i in range(sc.parties) if i != party))[outcome]
    if prob == 0 or (box.mode == FLOAT and float(prob) <= tolerance):
        raise BoxError(
            f"zero-probability branch: party {party} input {input_value} outcome {outcome}"
        )
    new_sc = Scenario(
        tuple(sc.inputs[p] for p in rest), tuple(sc.outputs[p] for p in rest)
    )
    tab = np.zeros(new_sc.table_shape, dtype=float if box.mode == FLOAT else object)
    if box.mode == RATIONAL:
        from fractions import Fraction

        tab[...] = Fraction(0)
    for x_rest in new_sc.joint_inputs():
        x_old = [0] * sc.parties
        for p, v in zip(rest, x_rest):
            x_old[p] = v
        x_old[party] = input_value
        for a_rest in new_sc.joint_outputs():
            a_old = [0] * sc.parties
            for p, v in zip(rest, a_rest):
                a_old[p] = v
            a_old[party] = outcome
            tab[x_rest + a_rest] = box.table[tuple(x_old) + tuple(a_old)] / prob
    return Box(new_sc, tab, box.mode), prob


@dataclass(frozen=True)
class PostselectStep:
    """Measure one party before the experiment and broadcast the outcome;
    each outcome maps to an optional relabeling of the remaining box.
    The party index refers to the box as it stands when the step runs."""

    party: int
    input: int
    handlers: dict  # outcome -> Relabeling | None

    def validate_for(self, scenario: Scenario):
        if not 0 <= self.party < scenario.parties:
            raise BoxError(f"step party {self.party} out of range")
        if not 0 <= self.input < scenario.inputs[self.party]:
            raise BoxError("step input out of range")
        for outcome in range(scenario.outputs[self.party]):
            if outcome not in self.handlers:
                raise BoxError(f"handler missing for outcome {outcome}")


@dataclass(frozen=True)
class Protocol:
    """Ordered preparation steps followed by measurement-phase wirings."""

    steps: tuple[PostselectStep, ...] = ()
    wirings: tuple[SequentialWiring, ...] = ()


def run_protocol(box: Box, protocol: Protocol, tolerance: float = EPS_VALIDATION) -> Box:
    branches = [(box, 1 if box.mode == RATIONAL else 1.0)]
    for step in protocol.steps:
        new_branches = []
        for b, weight in branches:
            step.validate_for(b.scenario)
            for outcome in range(b.scenario.outputs[step.party]):
                try:
                    cond, prob = postselect(b, step.party, step.input, outcome, tolerance)
                except BoxError:
                    log.info(
                        "dropping zero-probability branch: party %d input %d outcome %d",
                        step.party,
                        step.input,
                        outcome,
                    )
                    continue
                handler = step.handlers[outcome]
                if handler is not None:
                    cond = relabel(cond, handler)
                new_branches.append((cond, weight * prob))
        branches = new_branches
    if not branches:
        raise BoxError("all protocol branches had zero probability")
    boxes = [b for b, _ in branches]
    weights = [w for _, w in branches]
    out = mix(boxes, weights) if len(boxes) > 1 else boxes[0]
    for w in protocol.wirings:
        out = apply_sequential_wiring(out, w, tolerance)
    return out


def paper_fig1b_wiring() -> SequentialWiring:
    """Merge the last two parties of a binary tripartite box: the effective
    input is fed to the middle party, its output becomes the third party's
    input, and the effective output is the third party's output."""
    plans = []
    for x_eff in range(2):
        plans.append(
            WiringPlan(
                order=(1, 2),
                input_steps=({(): x_eff}, {(0,): 0, (1,): 1}),
                output_map={(a2, a3): a3 for a2 in range(2) for a3 in range(2)},
            )
        )
    return SequentialWiring((1, 2), 2, 2, tuple(plans))


def paper_broadcast_protocol() -> Protocol:
    """Middle party measures input 1 and broadcasts; one branch relabels the
    first party's outputs at its input 1, the other is kept as is.  The
    result is a bipartite box on the outer parties."""
    sc2 = Scenario((2, 2), (2, 2))
    flip = Relabeling.output_flip(sc2, party=0, at_input=1)
    step = PostselectStep(party=1, input=1, handlers={0: flip, 1: None})
    return Protocol(steps=(step,), wirings=())


def enumerate_wirings(
    scenario: Scenario,
    group: Sequence[int],
    effective_inputs: int = 2,
    effective_outputs: int = 2,
) -> Iterator[SequentialWiring]:
    """Exhaustive, duplicate-free stream of deterministic sequential wirings
    on a group of binary parties (group size <= 3).  Duplicates are plans
    inducing the same linear map on box tables."""
    group = tuple(sorted(int(p) for p in group))
    if len(group) > 3:
        raise BoxError("wiring enumeration capped at group size 3")
    for p in group:
        if scenario.inputs[p] != 2 or scenario.outputs[p] != 2:
            raise BoxError("wiring enumeration needs binary group alphabets")
    blocks = _distinct_plan_blocks(scenario, group, effective_outputs)
    for combo in itertools.product(blocks, repeat=effective_inputs):
        yield SequentialWiring(
            group, effective_inputs, effective_outputs, tuple(p for p, _ in combo)
        )


def _plan_block_key(scenario: Scenario, group: tuple[int, ...], plan: WiringPlan,
                    effective_outputs: int) -> bytes:
    """Signature of the per-effective-input linear map K[a_eff, (x_g, a_g)]."""
    in_sizes = [scenario.inputs[p] for p in group]
    out_sizes = [scenario.outputs[p] for p in group]
    K = np.zeros(
        (effective_outputs, math.prod(in_sizes) * math.prod(out_sizes)), dtype=np.int8
    )
    for a_ordered in itertools.product(*(range(scenario.outputs[p]) for p in plan.order)):
        x_group = _group_inputs_for(plan, a_ordered)
        a_eff = plan.output_map[a_ordered]
        a_by_party = dict(zip(plan.order, a_ordered))
        x_g = tuple(x_group[p] for p in group)
        a_g = tuple(a_by_party[p] for p in group)
        col = _ravel(x_g + a_g, tuple(in_sizes) + tuple(out_sizes))
        K[a_eff, col] += 1
    return K.tobytes()


def _distinct_plan_blocks(
    scenario: Scenario, group: tuple[int, ...], effective_outputs: int
) -> list[tuple[WiringPlan, bytes]]:
    seen = {}
    for order in itertools.permutations(group):
        out_sizes = [scenario.outputs[p] for p in order]
        step_spaces = []
        for k in range(len(order)):
            hists = list(itertools.product(*(range(s) for s in out_sizes[:k])))
            funcs = [
                dict(zip(hists, vals))
                for vals in itertools.product(
                    range(scenario.inputs[order[k]]), repeat=len(hists)
                )
            ]
            step_spaces.append(funcs)
        all_hists = list(itertools.product(*(range(s) for s in out_sizes)))
        out_funcs = [
            dict(zip(all_hists, vals))
            for vals in itertools.product(range(effective_outputs), repeat=len(all_hists))
        ]
        for steps in itertools.product(*step_spaces):
            for out_map in out_funcs:
                plan = WiringPlan(order, tuple(steps), out_map)
                key = _plan_block_key(scenario, group, plan, effective_outputs)
                if key not in seen:
                    seen[key] = plan
    return [(plan, key) for key, plan in seen.items()]
