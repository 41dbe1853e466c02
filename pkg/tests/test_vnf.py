"""Network-function behavior on a hand-wired single-slice rig.

The functions talk to each other directly (no interception proxies, gate
disabled) so these tests isolate the core-service logic: registration,
subscriber auth flows, session establishment, and the state machines.
"""

import hashlib
import secrets
import time
from types import SimpleNamespace

import pytest

from wavecore.netutil import HttpClient
from wavecore.vnf import (
    AmfVnf, AusfVnf, NrfVnf, SmfVnf, UdmVnf, UdrVnf, UpfVnf, UeSim, UeSimError,
)
from wavecore.vnf.base import TargetRef, VnfConfig


def make_vnf(cls, vnf_type, clock=time.time, extras=None):
    config = VnfConfig(
        vnf_type=vnf_type,
        slice_domain="slice1",
        pod=f"slice1-{vnf_type}",
        pod_ip="127.0.0.1",
        service_port=0,
        driver_port=0,
        gate_value="",            # no proxy in this rig: listeners stay open
        wscp_host="127.0.0.1",
        wscp_port=1,
        identity_mode="ip",
        extras=extras or {},
    )
    return cls(config, clock)


@pytest.fixture(scope="module")
def rig():
    offset = {"s": 0.0}

    nrf = make_vnf(NrfVnf, "nrf")
    udr = make_vnf(UdrVnf, "udr")
    udm = make_vnf(UdmVnf, "udm")
    ausf = make_vnf(AusfVnf, "ausf")
    amf = make_vnf(
        AmfVnf, "amf",
        clock=lambda: time.time() + offset["s"],
        extras={"auth_max_age_s": 5},
    )
    smf = make_vnf(SmfVnf, "smf")
    upf = make_vnf(UpfVnf, "upf")
    vnfs = (nrf, udr, udm, ausf, amf, smf, upf)

    def svc(vnf):
        return TargetRef(vnf.config.pod, "127.0.0.1", vnf.service_port)

    udm.config.targets["udr"] = svc(udr)
    ausf.config.targets["udm"] = svc(udm)
    amf.config.targets.update({"ausf": svc(ausf), "smf": svc(smf), "nrf": svc(nrf)})
    smf.config.targets.update({"amf": svc(amf), "nrf": svc(nrf)})
    smf.config.targets["upf-n4"] = TargetRef(upf.config.pod, "127.0.0.1", upf.driver_port)

    ue = UeSim("127.0.0.1", amf.driver_port)
    http = HttpClient(timeout=10.0)
    yield SimpleNamespace(
        nrf=nrf, udr=udr, udm=udm, ausf=ausf, amf=amf, smf=smf, upf=upf,
        ue=ue, http=http, offset=offset,
    )
    ue.close()
    http.close()
    for vnf in vnfs:
        vnf.stop()


def call(rig, port, method, path, payload=None):
    """Raw HTTP to a listener; returns (status, decoded body)."""
    if payload is None:
        response = rig.http.request(method, "127.0.0.1", port, path)
    else:
        response = rig.http.request_json(method, "127.0.0.1", port, path, payload)
    body = response.json() if response.body else {}
    return response.status, body


def driver_state(rig, vnf):
    status, body = call(rig, vnf.driver_port, "GET", "/state")
    assert status == 200
    return body


def seed_subscriber(rig, supi, key):
    status, _ = call(
        rig, rig.udr.driver_port, "POST", "/driver/subscribers",
        {"supi": supi, "key": key.hex(), "sqn": 0},
    )
    assert status == 201
    rig.ue.provision(supi, key)


def attach(rig, supi):
    key = secrets.token_bytes(32)
    seed_subscriber(rig, supi, key)
    outcome = rig.ue.attach(supi)
    assert outcome["result"] == "authenticated"
    return key, outcome


# --------------------------------------------------------------- registration


def test_amf_registration_reaches_registry(rig):
    status, profile = call(rig, rig.amf.driver_port, "POST", "/driver/register-nf", {})
    assert status == 200
    assert profile["nf_type"] == "amf"
    instances = driver_state(rig, rig.nrf)["instances"]
    assert instances["slice1-amf"]["nf_type"] == "amf"
    assert instances["slice1-amf"]["status"] == "REGISTERED"


def test_smf_registration_subscribes_then_registers(rig):
    status, body = call(rig, rig.smf.driver_port, "POST", "/driver/register-nf", {})
    assert status == 200
    assert body["profile"]["nf_type"] == "smf"
    state = driver_state(rig, rig.nrf)
    assert state["instances"]["slice1-smf"]["slice_domain"] == "slice1"
    subs = list(state["subscriptions"].values())
    assert any(
        s["subscriber"] == "slice1-smf" and s["nf_type_watch"] == "amf" for s in subs
    )


def test_reregistration_is_idempotent_and_keeps_heartbeats(rig):
    for _ in range(3):
        status, _ = call(rig, rig.amf.driver_port, "POST", "/driver/heartbeat", {})
        assert status == 200
    call(rig, rig.amf.driver_port, "POST", "/driver/register-nf", {})
    instance = driver_state(rig, rig.nrf)["instances"]["slice1-amf"]
    assert instance["heartbeats"] == 3
    assert instance["last_heartbeat_us"] > 0


def test_discovery_filters_by_type(rig):
    status, body = call(
        rig, rig.nrf.service_port, "GET",
        "/nnrf-disc/v1/nf-instances?target-nf-type=amf",
    )
    assert status == 200
    assert [i["nf_id"] for i in body["instances"]] == ["slice1-amf"]
    assert body["instances"][0]["address"].startswith("127.0.0.1:")


def test_discovery_filters_by_slice(rig):
    for path in (
        "/nnrf-nfm/v1/nf-instances/slice2-smf",
        "/nnrf-nfm/v1/nf-instances/slice1-extra-smf",
    ):
        slice_domain = "slice2" if "slice2" in path else "slice1"
        status, _ = call(
            rig, rig.nrf.service_port, "PUT", path,
            {"nf_type": "smf", "slice_domain": slice_domain},
        )
        assert status == 201
    status, body = call(
        rig, rig.nrf.service_port, "GET",
        "/nnrf-disc/v1/nf-instances?target-nf-type=smf&slice-domain=slice2",
    )
    assert status == 200
    assert [i["nf_id"] for i in body["instances"]] == ["slice2-smf"]


def test_missed_heartbeats_age_instance_out_of_discovery():
    offset = {"s": 0.0}
    nrf = make_vnf(NrfVnf, "nrf", clock=lambda: time.time() + offset["s"])
    http = HttpClient(timeout=5.0)
    try:
        def get(path, payload=None, method="GET"):
            if payload is None:
                response = http.request(method, "127.0.0.1", nrf.service_port, path)
            else:
                response = http.request_json(
                    method, "127.0.0.1", nrf.service_port, path, payload
                )
            return response.status, response.json() if response.body else {}

        get("/nnrf-nfm/v1/nf-instances/pod-a",
            {"nf_type": "upf", "slice_domain": "s", "heartbeat_interval_s": 2},
            method="PUT")
        _, body = get("/nnrf-disc/v1/nf-instances?target-nf-type=upf")
        assert len(body["instances"]) == 1

        offset["s"] += 7.0    # > 3 × 2 s without a heartbeat
        _, body = get("/nnrf-disc/v1/nf-instances?target-nf-type=upf")
        assert body["instances"] == []
        _, body = get("/nnrf-nfm/v1/nf-instances/pod-a")
        assert body["status"] == "STALE"

        status, body = get("/nnrf-nfm/v1/nf-instances/pod-a", {}, method="PATCH")
        assert status == 200 and body["status"] == "REGISTERED"
        _, body = get("/nnrf-disc/v1/nf-instances?target-nf-type=upf")
        assert len(body["instances"]) == 1
    finally:
        http.close()
        nrf.stop()


def test_subscription_lifecycle_and_unknowns(rig):
    status, sub = call(
        rig, rig.nrf.service_port, "POST", "/nnrf-nfm/v1/subscriptions",
        {"subscriber": "tester", "nf_type_watch": "smf"},
    )
    assert status == 201
    sub_id = sub["subscription_id"]
    status, body = call(
        rig, rig.nrf.service_port, "DELETE", f"/nnrf-nfm/v1/subscriptions/{sub_id}"
    )
    assert status == 200 and body["removed"] == sub_id
    status, body = call(
        rig, rig.nrf.service_port, "DELETE", f"/nnrf-nfm/v1/subscriptions/{sub_id}"
    )
    assert status == 404 and body["code"] == "unknown-subscription"
    status, body = call(
        rig, rig.nrf.service_port, "PATCH", "/nnrf-nfm/v1/nf-instances/ghost", {}
    )
    assert status == 404 and body["code"] == "unknown-instance"


# ------------------------------------------------------------- authentication


def test_attach_authenticates_and_derives_matching_keys(rig):
    supi = "imsi-001010000000001"
    key, outcome = attach(rig, supi)
    rand = bytes.fromhex(outcome["rand"])

    context = driver_state(rig, rig.amf)["ue_contexts"][supi]
    assert context["state"] == "authenticated"

    # both sides must arrive at the same session key from (key, challenge),
    # recomputed here from scratch
    expected = hashlib.sha256(key + rand).digest()
    assert rig.ue.session_key(supi) == expected
    assert rig.amf._ue[supi]["session_key"] == expected.hex()

    subscriber = driver_state(rig, rig.udr)["subscribers"][supi]
    assert subscriber["auth_status"]["status"] == "authenticated"
    assert subscriber["auth_status"]["serving"] == "slice1-amf"

    udm_state = driver_state(rig, rig.udm)
    assert udm_state["vectors_issued"] >= 1
    assert udm_state["events_recorded"] >= 1


def test_each_attach_issues_fresh_challenge_and_advances_sqn(rig):
    supi = "imsi-001010000000002"
    _, first = attach(rig, supi)
    second = rig.ue.attach(supi)
    assert first["rand"] != second["rand"]
    assert driver_state(rig, rig.udr)["subscribers"][supi]["sqn"] == 2


def test_wrong_key_fails_authentication(rig):
    supi = "imsi-001010000000003"
    seed_subscriber(rig, supi, secrets.token_bytes(32))
    with pytest.raises(UeSimError) as err:
        rig.ue.attach(supi, key=secrets.token_bytes(32))
    assert err.value.status == 401
    assert err.value.code == "authentication-failed"
    assert driver_state(rig, rig.amf)["ue_contexts"][supi]["state"] == "idle"
    subscriber = driver_state(rig, rig.udr)["subscribers"][supi]
    assert subscriber["auth_status"]["status"] == "failed"
    with pytest.raises(UeSimError) as err:
        rig.ue.pdu_session(supi, 1)
    assert err.value.status == 403
    assert err.value.code == "ue-not-authenticated"


def test_confirm_without_challenge_is_rejected(rig):
    status, body = call(
        rig, rig.amf.driver_port, "POST", "/ran/attach/confirm",
        {"supi": "imsi-001010000000004", "res": "00"},
    )
    assert status == 409
    assert body["code"] == "not-challenged"


def test_unknown_subscriber_propagates_through_the_chain(rig):
    rig.ue.provision("imsi-001010000000005", b"\x01" * 32)
    with pytest.raises(UeSimError) as err:
        rig.ue.attach("imsi-001010000000005")
    assert err.value.status == 404
    assert err.value.code == "unknown-supi"


# ------------------------------------------------------------------- sessions


def test_pdu_session_spans_smf_upf_and_notifies_ue(rig):
    supi = "imsi-001010000000006"
    attach(rig, supi)
    result = rig.ue.pdu_session(supi, 7)
    assert result["established"] is True
    ref = result["sm_context_ref"]

    context = driver_state(rig, rig.smf)["sm_contexts"][ref]
    assert context["state"] == "updated"
    assert context["supi"] == supi

    session = driver_state(rig, rig.upf)["sessions"]["7"]
    assert session["state"] == "modified"
    assert session["sm_context_ref"] == ref

    log = driver_state(rig, rig.amf)["ue_contexts"][supi]["n1n2_log"]
    assert [m["message_type"] for m in log] == ["pdu-session-establishment-accept"]


def test_session_create_rejected_for_unauthenticated_ue(rig):
    supi = "imsi-001010000000007"
    before = set(driver_state(rig, rig.smf)["sm_contexts"])
    status, body = call(
        rig, rig.smf.service_port, "POST", "/nsmf-pdusession/v1/sm-contexts",
        {"supi": supi, "session_id": 1},
    )
    assert status == 403
    assert body["code"] == "ue-not-authenticated"
    contexts = driver_state(rig, rig.smf)["sm_contexts"]
    new_refs = set(contexts) - before
    assert len(new_refs) == 1
    assert contexts[new_refs.pop()]["state"] == "rejected"


def test_session_fails_when_user_plane_is_down(rig):
    supi = "imsi-001010000000008"
    attach(rig, supi)
    live = rig.smf.config.targets["upf-n4"]
    rig.smf.config.targets["upf-n4"] = TargetRef(live.pod, "127.0.0.1", 1)
    try:
        with pytest.raises(UeSimError) as err:
            rig.ue.pdu_session(supi, 9)
        assert err.value.status == 503
    finally:
        rig.smf.config.targets["upf-n4"] = live
    contexts = driver_state(rig, rig.smf)["sm_contexts"]
    failed = [c for c in contexts.values() if c["supi"] == supi]
    assert failed and failed[-1]["state"] == "failed"


def test_modify_guards_context_state(rig):
    status, body = call(
        rig, rig.smf.service_port, "POST",
        "/nsmf-pdusession/v1/sm-contexts/ghost/modify", {},
    )
    assert status == 404 and body["code"] == "unknown-sm-context"
    rejected = [
        ref for ref, c in driver_state(rig, rig.smf)["sm_contexts"].items()
        if c["state"] == "rejected"
    ]
    status, body = call(
        rig, rig.smf.service_port, "POST",
        f"/nsmf-pdusession/v1/sm-contexts/{rejected[0]}/modify", {},
    )
    assert status == 409 and body["code"] == "sm-context-not-active"


def test_stale_authentication_requires_reattach(rig):
    supi = "imsi-001010000000009"
    attach(rig, supi)
    assert rig.ue.pdu_session(supi, 1)["established"] is True

    rig.offset["s"] += 30.0      # jump past auth_max_age_s=5
    with pytest.raises(UeSimError) as err:
        rig.ue.pdu_session(supi, 2)
    assert err.value.status == 403
    assert err.value.code == "ue-not-authenticated"

    rig.ue.attach(supi)
    assert rig.ue.pdu_session(supi, 3)["established"] is True


# ------------------------------------------------------------- introspection


def test_state_views_never_expose_key_material(rig):
    supi = "imsi-001010000000010"
    key, outcome = attach(rig, supi)
    rand = bytes.fromhex(outcome["rand"])
    secrets_hex = {
        key.hex(),
        hashlib.sha256(key + rand).hexdigest(),   # session key
        hashlib.sha256(rand + key).hexdigest(),   # challenge response
    }
    for vnf in (rig.nrf, rig.udr, rig.udm, rig.ausf, rig.amf, rig.smf, rig.upf):
        response = rig.http.request(
            "GET", "127.0.0.1", vnf.driver_port, "/state"
        )
        text = response.body.decode()
        assert "session_key" not in text, vnf.config.pod
        assert "expected_res" not in text, vnf.config.pod
        for secret in secrets_hex:
            assert secret not in text, vnf.config.pod


def test_every_core_api_path_routes(rig):
    surface = [
        (rig.nrf, "PUT", "/nnrf-nfm/v1/nf-instances/x"),
        (rig.nrf, "POST", "/nnrf-nfm/v1/subscriptions"),
        (rig.nrf, "PATCH", "/nnrf-nfm/v1/nf-instances/x"),
        (rig.nrf, "GET", "/nnrf-disc/v1/nf-instances"),
        (rig.ausf, "POST", "/nausf-auth/v1/ue-authentications"),
        (rig.ausf, "PUT", "/nausf-auth/v1/ue-authentications/x/5g-aka-confirmation"),
        (rig.udm, "POST", "/nudm-ueau/v1/x/security-information/generate-auth-data"),
        (rig.udm, "POST", "/nudm-ueau/v1/x/auth-events"),
        (rig.udr, "GET", "/nudr-dr/v1/subscription-data/x/authentication-subscription"),
        (rig.udr, "PATCH", "/nudr-dr/v1/subscription-data/x/authentication-subscription"),
        (rig.udr, "GET", "/nudr-dr/v1/subscription-data/x/authentication-status"),
        (rig.udr, "PUT", "/nudr-dr/v1/subscription-data/x/authentication-status"),
        (rig.smf, "POST", "/nsmf-pdusession/v1/sm-contexts"),
        (rig.smf, "POST", "/nsmf-pdusession/v1/sm-contexts/x/modify"),
        (rig.amf, "POST", "/namf-comm/v1/ue-contexts/x/n1n2-messages"),
    ]
    for vnf, method, path in surface:
        handler, _ = vnf._service_server.router.resolve(method, path)
        assert callable(handler), (vnf.config.pod, method, path)
