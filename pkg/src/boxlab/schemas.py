"""Versioned JSON schemas (pydantic models) for boxes, membership
certificates, protocols, Bell functionals, and reproduction reports, plus
converters to and from the core types.

Rational values are serialized as exact ``"p/q"`` strings so a round trip
never loses precision; float values stay JSON numbers.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .model import (
    FLOAT,
    RATIONAL,
    Box,
    BoxError,
    Partition,
    Relabeling,
    Scenario,
)

BOX_SCHEMA = "boxlab-box-v1"
CERT_SCHEMA = "boxlab-cert-v1"
PROTOCOL_SCHEMA = "boxlab-protocol-v1"
BELL_SCHEMA = "boxlab-bell-v1"
REPORT_SCHEMA = "boxlab-report-v1"

Value = Union[str, float, int]


def encode_value(v) -> Value:
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(v)


def decode_value(v: Value, mode: str):
    if mode == RATIONAL:
        return Fraction(v) if isinstance(v, str) else Fraction(v)
    return float(Fraction(v)) if isinstance(v, str) else float(v)


class _Model(BaseModel):
    model_config = ConfigDict(populate_by_name=True, extra="forbid")


class ScenarioModel(_Model):
    inputs: list[int]
    outputs: list[int]

    @field_validator("inputs", "outputs")
    @classmethod
    def _positive(cls, v):
        if not v or any(n < 1 for n in v):
            raise ValueError("alphabet sizes must be positive")
        return v


class BoxModel(_Model):
    schema_id: Literal["boxlab-box-v1"] = Field(BOX_SCHEMA, alias="schema")
    scenario: ScenarioModel
    mode: Literal["rational", "float"]
    table: list[Value]  # row-major over (x_1..x_N, a_1..a_N)


def box_to_model(box: Box) -> BoxModel:
    flat = [encode_value(v) for v in box.table.ravel()]
    return BoxModel(
        scenario=ScenarioModel(
            inputs=list(box.scenario.inputs), outputs=list(box.scenario.outputs)
        ),
        mode=box.mode,
        table=flat,
    )


def box_from_model(m: BoxModel) -> Box:
    sc = Scenario(tuple(m.scenario.inputs), tuple(m.scenario.outputs))
    if len(m.table) != sc.table_size:
        raise BoxError(
            f"table has {len(m.table)} entries, scenario needs {sc.table_size}"
        )
    vals = [decode_value(v, m.mode) for v in m.table]
    if m.mode == RATIONAL:
        tab = np.empty(sc.table_shape, dtype=object)
        tab.ravel()[:] = vals
    else:
        tab = np.array(vals, dtype=float).reshape(sc.table_shape)
    return Box(sc, tab, m.mode)


class StrategyModel(_Model):
    parties: list[int]
    outputs: list[list[int]]  # indexed by flattened joint input of `parties`


class TermModel(_Model):
    weight: Value
    strategies: dict[str, StrategyModel] = {}
    tables: dict[str, list[Value]] = {}  # flat over (x_side..., a_side...)


class FarkasModel(_Model):
    row_labels: list[list]
    multipliers: list[Value]


class CertificateModel(_Model):
    schema_id: Literal["boxlab-cert-v1"] = Field(CERT_SCHEMA, alias="schema")
    verdict: str
    class_tag: str = Field(alias="class")
    mode: Literal["rational", "float"]
    partition: Optional[str] = None  # "1|2,3" in 1-based labels
    side_a: list[int] = []
    side_b: list[int] = []
    terms: Optional[list[TermModel]] = None
    farkas: Optional[FarkasModel] = None
    residual: Optional[float] = None
    margin: Optional[float] = None
    detail: str = ""


def _partition_str(p: Partition | None) -> str | None:
    if p is None:
        return None
    a = ",".join(str(i + 1) for i in p.group_a)
    b = ",".join(str(i + 1) for i in p.group_b)
    return f"{a}|{b}"


def certificate_to_model(result, mode: str, residual: float | None = None) -> CertificateModel:
    """Serialize a MembershipResult; imports are local to avoid a cycle."""
    from .membership import Decomposition, FarkasCertificate

    terms = None
    farkas = None
    partition = None
    side_a: list[int] = []
    side_b: list[int] = []
    cert = result.certificate
    if isinstance(cert, Decomposition):
        partition = _partition_str(cert.partition)
        side_a = list(cert.side_a)
        side_b = list(cert.side_b)
        terms = []
        for t in cert.terms:
            strategies = {
                label: StrategyModel(
                    parties=list(s.parties), outputs=[list(o) for o in s.outputs]
                )
                for label, s in t.strategies.items()
            }
            tables = {
                label: [encode_value(v) for v in np.asarray(tab).ravel()]
                for label, tab in t.tables.items()
            }
            terms.append(
                TermModel(
                    weight=encode_value(t.weight), strategies=strategies, tables=tables
                )
            )
    elif isinstance(cert, FarkasCertificate):
        farkas = FarkasModel(
            row_labels=[list(l) if isinstance(l, tuple) else [l] for l in cert.row_labels],
            multipliers=[encode_value(v) for v in cert.multipliers],
        )
    return CertificateModel(
        verdict=result.verdict,
        class_tag=result.class_tag,
        mode=mode,
        partition=partition,
        side_a=side_a,
        side_b=side_b,
        terms=terms,
        farkas=farkas,
        residual=residual,
        margin=result.margin,
        detail=result.detail,
    )


class RelabelingModel(_Model):
    input_maps: list[list[int]]
    output_maps: list[list[list[int]]]
    party_perm: Optional[list[int]] = None


def relabeling_to_model(r: Relabeling) -> RelabelingModel:
    return RelabelingModel(
        input_maps=[list(m) for m in r.input_maps],
        output_maps=[[list(p) for p in m] for m in r.output_maps],
        party_perm=list(r.party_perm) if r.party_perm is not None else None,
    )


def relabeling_from_model(m: RelabelingModel) -> Relabeling:
    return Relabeling(
        tuple(tuple(x) for x in m.input_maps),
        tuple(tuple(tuple(p) for p in x) for x in m.output_maps),
        tuple(m.party_perm) if m.party_perm is not None else None,
    )


class WiringPlanModel(_Model):
    order: list[int]
    # history keys are comma-joined output digits; "" is the empty history
    input_steps: list[dict[str, int]]
    output_map: dict[str, int]


class WiringModel(_Model):
    group: list[int]
    effective_inputs: int
    effective_outputs: int
    plans: list[WiringPlanModel]


class PostselectStepModel(_Model):
    kind: Literal["postselect"] = "postselect"
    party: int
    input: int
    handlers: dict[str, Optional[RelabelingModel]]  # outcome digit -> relabeling


class ProtocolModel(_Model):
    schema_id: Literal["boxlab-protocol-v1"] = Field(PROTOCOL_SCHEMA, alias="schema")
    steps: list[PostselectStepModel] = []
    wirings: list[WiringModel] = []


def _hist_key(hist: tuple) -> str:
    return ",".join(str(v) for v in hist)


def _hist_from_key(key: str) -> tuple:
    return tuple(int(v) for v in key.split(",")) if key else ()


def wiring_to_model(w) -> WiringModel:
    plans = []
    for plan in w.plans:
        plans.append(
            WiringPlanModel(
                order=list(plan.order),
                input_steps=[
                    {_hist_key(h): v for h, v in step.items()}
                    for step in plan.input_steps
                ],
                output_map={_hist_key(h): v for h, v in plan.output_map.items()},
            )
        )
    return WiringModel(
        group=list(w.group),
        effective_inputs=w.n_effective_inputs,
        effective_outputs=w.n_effective_outputs,
        plans=plans,
    )


def wiring_from_model(m: WiringModel):
    from .wiring import SequentialWiring, WiringPlan

    plans = []
    for p in m.plans:
        plans.append(
            WiringPlan(
                tuple(p.order),
                tuple(
                    {_hist_from_key(k): v for k, v in step.items()}
                    for step in p.input_steps
                ),
                {_hist_from_key(k): v for k, v in p.output_map.items()},
            )
        )
    return SequentialWiring(
        tuple(m.group), m.effective_inputs, m.effective_outputs, tuple(plans)
    )


def protocol_to_model(protocol) -> ProtocolModel:
    steps = [
        PostselectStepModel(
            party=s.party,
            input=s.input,
            handlers={
                str(k): (relabeling_to_model(h) if h is not None else None)
                for k, h in s.handlers.items()
            },
        )
        for s in protocol.steps
    ]
    return ProtocolModel(
        steps=steps, wirings=[wiring_to_model(w) for w in protocol.wirings]
    )


def protocol_from_model(m: ProtocolModel):
    from .wiring import PostselectStep, Protocol

    steps = tuple(
        PostselectStep(
            party=s.party,
            input=s.input,
            handlers={
                int(k): (relabeling_from_model(h) if h is not None else None)
                for k, h in s.handlers.items()
            },
        )
        for s in m.steps
    )
    return Protocol(steps=steps, wirings=tuple(wiring_from_model(w) for w in m.wirings))


class BellModel(_Model):
    schema_id: Literal["boxlab-bell-v1"] = Field(BELL_SCHEMA, alias="schema")
    name: str = ""
    scenario: ScenarioModel
    coefficients: list[Value]  # row-major over (x_1..x_N, a_1..a_N)
    known_bounds: dict[str, Value] = {}


def bell_to_model(f) -> BellModel:
    return BellModel(
        name=f.name,
        scenario=ScenarioModel(
            inputs=list(f.scenario.inputs), outputs=list(f.scenario.outputs)
        ),
        coefficients=[encode_value(v) for v in f.coefficients.ravel()],
        known_bounds={k: encode_value(v) for k, v in f.known_bounds.items()},
    )


def bell_from_model(m: BellModel):
    from .bell import BellFunctional

    sc = Scenario(tuple(m.scenario.inputs), tuple(m.scenario.outputs))
    if len(m.coefficients) != sc.table_size:
        raise BoxError("coefficient count does not match scenario")
    coeffs = np.empty(sc.table_shape, dtype=object)
    coeffs.ravel()[:] = [Fraction(v) for v in m.coefficients]
    bounds = {k: Fraction(v) if isinstance(v, str) else v for k, v in m.known_bounds.items()}
    return BellFunctional(sc, coeffs, name=m.name, known_bounds=bounds)


class ClaimResult(_Model):
    name: str
    passed: bool
    value: Optional[Value] = None
    expected: Optional[Value] = None
    tolerance: Optional[float] = None
    provenance: str = ""
    seconds: Optional[float] = None
    detail: str = ""


class RunReport(_Model):
    schema_id: Literal["boxlab-report-v1"] = Field(REPORT_SCHEMA, alias="schema")
    command: str
    claims: list[ClaimResult]
    passed: bool
    seconds: float
