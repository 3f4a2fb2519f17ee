"""HTTP service exposing the library operations.

The CLI talks to this app in-process by default; ``uvicorn
boxlab.service:app`` serves it over the network.  Every endpoint is a thin
adapter: parse models, call the library, serialize the result.  Domain
errors map to 422 (bad input) or 409 (undecidable at this scale).
"""

from __future__ import annotations

from typing import Literal, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict

from . import bell, membership, quantum, wiring
from .lp import LPError
from .model import (
    EPS_MEMBERSHIP,
    EPS_VALIDATION,
    BoxError,
    ModeMismatchError,
    Partition,
    SignallingError,
    is_no_signalling,
    rationalize,
    validate_box,
)
from .reproduce import run_reproduce
from .schemas import (
    BellModel,
    BoxModel,
    CertificateModel,
    ProtocolModel,
    RunReport,
    bell_from_model,
    bell_to_model,
    box_from_model,
    box_to_model,
    certificate_to_model,
    encode_value,
    protocol_from_model,
)

app = FastAPI(title="boxlab", version="1.0")


class _Req(BaseModel):
    model_config = ConfigDict(populate_by_name=True)


class ValidateRequest(_Req):
    box: BoxModel
    tolerance: float = EPS_VALIDATION


class ValidateResponse(_Req):
    valid: bool
    no_signalling: bool
    max_normalization_error: float
    max_signalling_discrepancy: float
    detail: str = ""


class MembershipRequest(_Req):
    box: BoxModel
    class_tag: str  # local | bl | nsbl | tobl | tobl-general
    partition: Optional[str] = None  # "1|2,3", 1-based
    mode: Optional[Literal["rational", "float"]] = None
    tolerance: float = EPS_MEMBERSHIP
    independent_weights: bool = False


class WireRequest(_Req):
    box: BoxModel
    protocol: ProtocolModel
    tolerance: float = EPS_VALIDATION


class WireResponse(_Req):
    box: BoxModel


class BellEvaluateRequest(_Req):
    box: BoxModel
    functional: Optional[str] = None  # chsh | gyni
    functional_json: Optional[BellModel] = None


class BellEvaluateResponse(_Req):
    value: float
    exact: Optional[str] = None


class BellMaxRequest(_Req):
    functional: Optional[str] = None
    functional_json: Optional[BellModel] = None
    class_tag: str  # ns | local | nsbl | tobl
    partition: Optional[str] = None
    mode: Literal["rational", "float"] = "rational"
    tolerance: float = EPS_MEMBERSHIP


class BellMaxResponse(_Req):
    value: float
    exact: Optional[str] = None
    attainer: BoxModel


class RationalizeRequest(_Req):
    box: BoxModel
    tolerance: float = 1e-9


class RationalizeResponse(_Req):
    box: BoxModel
    residual: float


class ReproduceRequest(_Req):
    tamper: float = 0.0


_CLASS_CHECKS = {
    "local": membership.LOCAL,
    "bl": membership.BL,
    "nsbl": membership.NSBL,
    "tobl": membership.TOBL,
    "tobl-general": membership.GROUPED_TOBL,
}

_MAX_CLASSES = {
    "ns": bell.NS,
    "local": membership.LOCAL,
    "nsbl": membership.NSBL,
    "tobl": membership.TOBL,
}


def _domain(exc: Exception) -> HTTPException:
    if isinstance(exc, (LPError,)) or (
        isinstance(exc, BoxError) and "cap" in str(exc)
    ):
        return HTTPException(status_code=409, detail=str(exc))
    return HTTPException(status_code=422, detail=str(exc))


def _functional(name: Optional[str], model: Optional[BellModel]):
    if model is not None:
        return bell_from_model(model)
    if name == "chsh":
        return bell.chsh()
    if name == "gyni":
        return bell.gyni()
    raise HTTPException(
        status_code=422, detail=f"unknown functional {name!r}; pass chsh, gyni, or JSON"
    )


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/validate", response_model=ValidateResponse)
def validate(req: ValidateRequest):
    try:
        box = box_from_model(req.box)
        report = validate_box(box, req.tolerance)
        ns = is_no_signalling(box, req.tolerance)
    except (BoxError, ValueError) as exc:
        raise _domain(exc)
    return ValidateResponse(
        valid=report.valid,
        no_signalling=ns.passed,
        max_normalization_error=float(report.max_residual),
        max_signalling_discrepancy=float(ns.max_discrepancy),
        detail="" if report.valid else f"most negative entry {report.most_negative}",
    )


@app.post("/membership", response_model=CertificateModel)
def membership_endpoint(req: MembershipRequest):
    if req.class_tag not in _CLASS_CHECKS:
        raise HTTPException(422, f"unknown class {req.class_tag!r}")
    try:
        box = box_from_model(req.box)
        mode = req.mode or box.mode
        part = Partition.parse(req.partition) if req.partition else None
        tag = _CLASS_CHECKS[req.class_tag]
        if tag == membership.LOCAL:
            result = membership.check_local(box, mode=mode, tolerance=req.tolerance)
        else:
            if part is None:
                raise BoxError(f"class {req.class_tag} needs --partition")
            if tag == membership.BL:
                result = membership.check_bl(box, part, mode=mode, tolerance=req.tolerance)
            elif tag == membership.NSBL:
                result = membership.check_nsbl(box, part, mode=mode, tolerance=req.tolerance)
            elif tag == membership.TOBL:
                result = membership.check_tobl(
                    box, part, mode=mode, tolerance=req.tolerance,
                    independent_weights=req.independent_weights,
                )
            else:
                result = membership.check_tobl_general(
                    box, part, mode=mode, tolerance=req.tolerance
                )
        residual = None
        if result.is_member and isinstance(result.certificate, membership.Decomposition):
            residual = float(
                membership.reconstruction_residual(result.certificate, box)
            )
        return certificate_to_model(result, mode, residual=residual)
    except (BoxError, LPError, ValueError) as exc:
        raise _domain(exc)


@app.post("/wire", response_model=WireResponse)
def wire(req: WireRequest):
    try:
        box = box_from_model(req.box)
        protocol = protocol_from_model(req.protocol)
        out = wiring.run_protocol(box, protocol, tolerance=req.tolerance)
    except (BoxError, ValueError) as exc:
        raise _domain(exc)
    return WireResponse(box=box_to_model(out))


@app.post("/bell/evaluate", response_model=BellEvaluateResponse)
def bell_evaluate(req: BellEvaluateRequest):
    try:
        box = box_from_model(req.box)
        f = _functional(req.functional, req.functional_json)
        value = bell.evaluate(f, box)
    except (BoxError, ValueError) as exc:
        raise _domain(exc)
    exact = encode_value(value)
    return BellEvaluateResponse(
        value=float(value), exact=exact if isinstance(exact, str) else None
    )


@app.post("/bell/max", response_model=BellMaxResponse)
def bell_max(req: BellMaxRequest):
    if req.class_tag not in _MAX_CLASSES:
        raise HTTPException(422, f"cannot maximize over {req.class_tag!r}")
    try:
        f = _functional(req.functional, req.functional_json)
        part = Partition.parse(req.partition) if req.partition else None
        value, attainer, _ = bell.max_over_set(
            f, _MAX_CLASSES[req.class_tag], part, mode=req.mode, tolerance=req.tolerance
        )
    except (BoxError, LPError, ValueError) as exc:
        raise _domain(exc)
    exact = encode_value(value)
    return BellMaxResponse(
        value=float(value),
        exact=exact if isinstance(exact, str) else None,
        attainer=box_to_model(attainer),
    )


@app.post("/rationalize", response_model=RationalizeResponse)
def rationalize_endpoint(req: RationalizeRequest):
    try:
        box = box_from_model(req.box)
        out, residual = rationalize(box, req.tolerance)
    except (BoxError, ValueError) as exc:
        raise _domain(exc)
    return RationalizeResponse(box=box_to_model(out), residual=float(residual))


@app.get("/quantum/ghz-paper", response_model=BoxModel)
def quantum_ghz_paper():
    return box_to_model(quantum.paper_ghz_box())


class GhzRequest(_Req):
    # per party, per input: "theta:<radians>" observable specs
    angles: list[list[str]]


@app.post("/quantum/ghz", response_model=BoxModel)
def quantum_ghz(req: GhzRequest):
    try:
        n = len(req.angles)
        settings = [[quantum.parse_angle(s) for s in party] for party in req.angles]
        box = quantum.born_box(quantum.ghz_state(n), settings)
    except (BoxError, ValueError) as exc:
        raise _domain(exc)
    return box_to_model(box)


@app.post("/reproduce", response_model=RunReport)
def reproduce(req: ReproduceRequest):
    return run_reproduce(tamper=req.tamper)
