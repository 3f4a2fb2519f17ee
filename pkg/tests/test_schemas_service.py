import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from boxlab import bell, membership, wiring
from boxlab.model import Partition, rationalize
from boxlab.schemas import (
    BellModel,
    BoxModel,
    ProtocolModel,
    WiringModel,
    bell_from_model,
    bell_to_model,
    box_from_model,
    box_to_model,
    certificate_to_model,
    protocol_from_model,
    protocol_to_model,
    wiring_from_model,
    wiring_to_model,
)
from boxlab.service import app

from conftest import pr_box


@pytest.fixture(scope="module")
def client():
    return TestClient(app, raise_server_exceptions=False)


def test_box_json_round_trip_float(ghz):
    dumped = box_to_model(ghz).model_dump_json(by_alias=True)
    back = box_from_model(BoxModel.model_validate_json(dumped))
    assert back.mode == "float"
    assert np.array_equal(back.float_table(), ghz.float_table())


def test_box_json_round_trip_rational(ghz):
    rbox, _ = rationalize(ghz, 1e-8)
    dumped = box_to_model(rbox).model_dump_json(by_alias=True)
    back = box_from_model(BoxModel.model_validate_json(dumped))
    assert back.mode == "rational"
    assert all(a == b for a, b in zip(back.table.ravel(), rbox.table.ravel()))


def test_box_schema_header(ghz):
    payload = json.loads(box_to_model(ghz).model_dump_json(by_alias=True))
    assert payload["schema"] == "boxlab-box-v1"
    assert set(payload) == {"schema", "scenario", "mode", "table"}


def test_box_model_rejects_wrong_size():
    m = BoxModel(
        scenario={"inputs": [2, 2], "outputs": [2, 2]}, mode="float", table=[0.5] * 10
    )
    from boxlab.model import BoxError

    with pytest.raises(BoxError):
        box_from_model(m)


def test_bell_round_trip():
    f = bell.chsh()
    dumped = bell_to_model(f).model_dump_json(by_alias=True)
    back = bell_from_model(BellModel.model_validate_json(dumped))
    assert back.name == f.name
    assert all(a == b for a, b in zip(back.coefficients.ravel(), f.coefficients.ravel()))


def test_protocol_round_trip(ghz):
    proto = wiring.paper_broadcast_protocol()
    dumped = protocol_to_model(proto).model_dump_json(by_alias=True)
    back = protocol_from_model(ProtocolModel.model_validate_json(dumped))
    a = wiring.run_protocol(ghz, proto)
    b = wiring.run_protocol(ghz, back)
    assert np.allclose(a.float_table(), b.float_table())


def test_wiring_round_trip(ghz):
    w = wiring.paper_fig1b_wiring()
    dumped = wiring_to_model(w).model_dump_json(by_alias=True)
    back = wiring_from_model(WiringModel.model_validate_json(dumped))
    a = wiring.apply_sequential_wiring(ghz, w)
    b = wiring.apply_sequential_wiring(ghz, back)
    assert np.array_equal(a.float_table(), b.float_table())


def test_certificate_member_serializes(ghz):
    part = Partition((0,), (1, 2))
    res = membership.check_bl(ghz, part, mode="float")
    model = certificate_to_model(res, "float", residual=1e-16)
    payload = json.loads(model.model_dump_json(by_alias=True))
    assert payload["schema"] == "boxlab-cert-v1"
    assert payload["verdict"] == "Member"
    assert payload["terms"]
    total = sum(float(t["weight"]) for t in payload["terms"])
    assert total == pytest.approx(1.0, abs=1e-9)


def test_certificate_nonmember_exact_farkas():
    res = membership.check_local(pr_box(), mode="rational")
    model = certificate_to_model(res, "rational")
    payload = json.loads(model.model_dump_json(by_alias=True))
    assert payload["verdict"] == "NonMember"
    assert payload["farkas"]["multipliers"]


# --- service endpoints ---


def test_health(client):
    assert client.get("/health").json() == {"status": "ok"}


def test_service_validate(client, ghz):
    body = {"box": json.loads(box_to_model(ghz).model_dump_json(by_alias=True))}
    r = client.post("/validate", json=body)
    assert r.status_code == 200
    data = r.json()
    assert data["valid"] and data["no_signalling"]


def test_service_validate_rejects_garbage(client):
    r = client.post("/validate", json={"box": {"schema": "boxlab-box-v1"}})
    assert r.status_code == 422


def test_service_membership(client, ghz):
    body = {
        "box": json.loads(box_to_model(ghz).model_dump_json(by_alias=True)),
        "class_tag": "tobl",
        "partition": "1|2,3",
        "mode": "float",
    }
    r = client.post("/membership", json=body)
    assert r.status_code == 200
    assert r.json()["verdict"] == "NonMember"


def test_service_membership_needs_partition(client, ghz):
    body = {
        "box": json.loads(box_to_model(ghz).model_dump_json(by_alias=True)),
        "class_tag": "nsbl",
    }
    assert client.post("/membership", json=body).status_code == 422


def test_service_wire_and_bell(client, ghz):
    proto = wiring.Protocol(wirings=(wiring.paper_fig1b_wiring(),))
    body = {
        "box": json.loads(box_to_model(ghz).model_dump_json(by_alias=True)),
        "protocol": json.loads(protocol_to_model(proto).model_dump_json(by_alias=True)),
    }
    r = client.post("/wire", json=body)
    assert r.status_code == 200
    wired = r.json()["box"]
    r2 = client.post("/bell/evaluate", json={"box": wired, "functional": "chsh"})
    assert r2.status_code == 200
    assert r2.json()["value"] == pytest.approx(3 / 2**0.5, abs=1e-9)


def test_service_bell_max(client):
    r = client.post(
        "/bell/max",
        json={"functional": "gyni", "class_tag": "nsbl", "partition": "1|2,3",
              "mode": "rational"},
    )
    assert r.status_code == 200
    data = r.json()
    assert data["exact"] in (None, "1") or data["value"] == 1.0
    assert data["value"] == pytest.approx(1.0)


def test_service_quantum_ghz(client):
    r = client.get("/quantum/ghz-paper")
    assert r.status_code == 200
    box = box_from_model(BoxModel.model_validate(r.json()))
    assert box.scenario.inputs == (2, 2, 2)
    r2 = client.post(
        "/quantum/ghz",
        json={"angles": [["theta:0", "theta:1.5707963267948966"]] * 2},
    )
    assert r2.status_code == 200


def test_service_unknown_functional(client, ghz):
    body = {
        "box": json.loads(box_to_model(ghz).model_dump_json(by_alias=True)),
        "functional": "mermin",
    }
    assert client.post("/bell/evaluate", json=body).status_code == 422
