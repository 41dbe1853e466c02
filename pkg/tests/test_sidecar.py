"""Sidecars: grants, per-request verification, interception, signed mode."""

import json
import secrets
import time

import pytest

from wavecore import crypto, httpd, protocol
from wavecore.daemon import DaemonClient, DaemonServer, DaemonService
from wavecore.httpd import Router
from wavecore.netutil import HttpClient, TransportError, wait_for_health
from wavecore.sidecar import NonceCache, RscpProxy, WscpAgent, WscpServer
from wavecore.sidecar.signing import parse_signature_header
from wavecore.store import ObjectStore, StoreClient, StoreServer

GATE = secrets.token_hex(16)


def make_upstream(host):
    """A stand-in VNF: gated listener that echoes what the proxy delivers."""
    router = Router()

    def echo(request):
        return {
            "path": request.path,
            "requester": request.headers.get("X-Requester-Hash"),
            "gate_seen": protocol.POD_GATE_HEADER in request.headers,
            "body": json.loads(request.body) if request.body else None,
        }

    router.add("POST", "/svc/echo", echo)
    router.add("GET", "/svc/echo", echo)
    router.add("GET", "/healthz", lambda req: {"status": "ok"})
    return httpd.start_server(
        host, 0, router, gate_header=protocol.POD_GATE_HEADER, gate_value=GATE
    )


@pytest.fixture(scope="module")
def rig(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("sidecar")
    store_server = StoreServer(ObjectStore(tmp / "store"), "127.0.0.1", 0)
    wait_for_health("127.0.0.1", store_server.port)
    endpoints = [("127.0.0.1", store_server.port)]

    service = DaemonService(StoreClient(endpoints), tmp / "daemon")
    daemon_server = DaemonServer(service, "127.0.0.1", 0)
    wait_for_health("127.0.0.1", daemon_server.port)
    daemon = DaemonClient("127.0.0.1", daemon_server.port)

    upstream = make_upstream("127.0.0.1")

    agent = WscpAgent("provider-nrf", "slice1", "nrf",
                      DaemonClient("127.0.0.1", daemon_server.port),
                      StoreClient(endpoints))
    wscp_server = WscpServer(agent, "127.0.0.1", 0)
    wait_for_health("127.0.0.1", wscp_server.port)

    proxy = RscpProxy(
        "slice1-nrf",
        "127.0.0.1", 0,
        "127.0.0.1", upstream.bound_port,
        "127.0.0.1", wscp_server.port,
        "127.0.0.1", 0,
        gate_value=GATE,
    )
    wait_for_health("127.0.0.1", proxy.admin_port)

    yield {
        "endpoints": endpoints,
        "daemon": daemon,
        "daemon_server": daemon_server,
        "agent": agent,
        "wscp": wscp_server,
        "proxy": proxy,
        "upstream_port": upstream.bound_port,
        "tmp": tmp,
    }
    proxy.stop()
    wscp_server.stop()
    httpd.stop_server(upstream)
    daemon_server.stop()
    store_server.stop()


@pytest.fixture(autouse=True)
def reset_modes(rig):
    yield
    rig["agent"].set_mode("ip", replay_protection=True)
    rig["proxy"].mode = "enforce"
    rig["proxy"].capture_enabled = False


def new_requester(rig, label, source_ip):
    created = rig["daemon"].ensure_entity(label)
    requester_hash = bytes.fromhex(created["entity_hash"])
    rig["agent"].grant(requester_hash, label, "slice1", source_ip)
    return requester_hash


def records_after(rig, seq):
    client = HttpClient()
    response = client.request_json(
        "GET", "127.0.0.1", rig["proxy"].admin_port, f"/admin/records?since_seq={seq}"
    )
    client.close()
    return response.json()["records"]


def next_seq(rig):
    client = HttpClient()
    response = client.request_json(
        "GET", "127.0.0.1", rig["proxy"].admin_port, "/admin/records?since_seq=0&limit=1"
    )
    client.close()
    return response.json()["next_seq"]


# -------------------------------------------------------------- bootstrap


def test_agent_restart_reuses_identity(rig):
    first = WscpAgent("restarting-vnf", "slice1", "amf",
                      rig["daemon"], StoreClient(rig["endpoints"]))
    second = WscpAgent("restarting-vnf", "slice1", "amf",
                       rig["daemon"], StoreClient(rig["endpoints"]))
    assert first.entity_hash == second.entity_hash


# ------------------------------------------------------- allow/deny paths


def test_granted_requester_passes_through(rig):
    requester = new_requester(rig, "req-pass", "127.0.0.1")
    seq = next_seq(rig)
    client = HttpClient()
    response = client.request_json(
        "POST", "127.0.0.1", rig["proxy"].listen_port, "/svc/echo", {"n": 1}
    )
    client.close()
    assert response.status == 200
    body = response.json()
    assert body["gate_seen"] is True
    assert body["requester"] == requester.hex()
    assert body["body"] == {"n": 1}

    records = records_after(rig, seq)
    assert len(records) == 1
    record = records[0]
    assert record["verdict"] == "allowed"
    assert record["requester_hash"] == requester.hex()
    assert record["verify_ms"] > 0
    assert 0 < record["base_ms"] < record["total_ms"]


def test_unbound_source_is_denied(rig):
    # a client bound to an address no grant names
    rogue = HttpClient(source_ip="127.31.99.1")
    response = rogue.request_json(
        "POST", "127.0.0.1", rig["proxy"].listen_port, "/svc/echo", {"n": 2}
    )
    rogue.close()
    assert response.status == 403
    body = response.json()
    assert body["code"] == "authorization-denied"
    assert body["reason"] == "unbound-address"


def test_method_outside_grant_is_denied(rig):
    requester = new_requester(rig, "req-narrow", "127.31.99.2")
    client = HttpClient(source_ip="127.31.99.2")
    response = client.request("DELETE", "127.0.0.1", rig["proxy"].listen_port, "/svc/echo")
    client.close()
    assert response.status == 403
    assert json.loads(response.body)["reason"] == "insufficient-permissions"


def test_revoked_grant_denied_on_next_request(rig):
    requester = new_requester(rig, "req-revoked", "127.31.99.3")
    client = HttpClient(source_ip="127.31.99.3")
    ok = client.request_json("GET", "127.0.0.1", rig["proxy"].listen_port, "/svc/echo")
    assert ok.status == 200

    admin = HttpClient()
    revoked = admin.request_json(
        "POST", "127.0.0.1", rig["wscp"].port, "/admin/revoke",
        {"requester_hash": requester.hex()},
    )
    assert revoked.status == 200
    admin.close()

    denied = client.request_json("GET", "127.0.0.1", rig["proxy"].listen_port, "/svc/echo")
    client.close()
    assert denied.status == 403
    assert denied.json()["reason"] == "revoked"


def test_exactly_one_verification_per_request(rig):
    new_requester(rig, "req-counter", "127.31.99.4")
    before = rig["agent"].stats.authz_calls
    seq = next_seq(rig)
    client = HttpClient(source_ip="127.31.99.4")
    for _ in range(5):
        client.request_json("GET", "127.0.0.1", rig["proxy"].listen_port, "/svc/echo")
    client.close()
    assert rig["agent"].stats.authz_calls == before + 5
    assert len(records_after(rig, seq)) == 5


# ------------------------------------------------------------ zero bypass


def test_direct_upstream_connection_is_refused(rig):
    client = HttpClient()
    with pytest.raises(TransportError):
        client.request_json("POST", "127.0.0.1", rig["upstream_port"], "/svc/echo", {"n": 3})
    client.close()

    guesser = HttpClient()
    with pytest.raises(TransportError):
        guesser.request_json(
            "POST", "127.0.0.1", rig["upstream_port"], "/svc/echo", {"n": 4},
            headers={protocol.POD_GATE_HEADER: "not-the-secret"},
        )
    guesser.close()


# ------------------------------------------------------------ signed mode


def signer_rig(rig, label, grant=True):
    """A requester able to mint signature headers through its own agent."""
    signer_agent = WscpAgent(label, "slice1", "amf", rig["daemon"],
                             StoreClient(rig["endpoints"]))
    signer = WscpServer(signer_agent, "127.0.0.1", 0)
    if grant:
        rig["agent"].grant(signer_agent.entity_hash, label, "slice1", "127.0.0.1")
    return signer


def sign_via(signer, method, target, body):
    client = HttpClient()
    response = client.request_json(
        "POST", "127.0.0.1", signer.port, "/sign-request",
        {"method": method, "target": target, "body_sha256": crypto.digest(body).hex()},
    )
    client.close()
    assert response.status == 200, response.body
    return response.json()["header"]


def set_agent_mode(rig, mode, replay_protection=None):
    payload = {"mode": mode}
    if replay_protection is not None:
        payload["replay_protection"] = replay_protection
    client = HttpClient()
    response = client.request_json(
        "POST", "127.0.0.1", rig["wscp"].port, "/admin/mode", payload
    )
    client.close()
    assert response.status == 200


def test_signed_mode_accepts_fresh_header_and_blocks_replay(rig):
    signer = signer_rig(rig, "req-signer")
    try:
        set_agent_mode(rig, "signed")
        body = json.dumps({"n": 5}).encode()
        header = sign_via(signer, "POST", "/svc/echo", body)

        client = HttpClient()
        first = client.request(
            "POST", "127.0.0.1", rig["proxy"].listen_port, "/svc/echo", body,
            {protocol.SIGNED_REQUEST_HEADER: header, "Content-Type": "application/json"},
        )
        assert first.status == 200

        replay = client.request(
            "POST", "127.0.0.1", rig["proxy"].listen_port, "/svc/echo", body,
            {protocol.SIGNED_REQUEST_HEADER: header, "Content-Type": "application/json"},
        )
        assert replay.status == 403
        assert json.loads(replay.body)["reason"] == "replay"

        missing = client.request(
            "POST", "127.0.0.1", rig["proxy"].listen_port, "/svc/echo", body,
            {"Content-Type": "application/json"},
        )
        assert missing.status == 403
        assert json.loads(missing.body)["reason"] == "missing-signature"
        client.close()
    finally:
        signer.stop()


def test_signed_mode_rejects_stale_unknown_and_tampered(rig):
    signer = signer_rig(rig, "req-signer-2")
    unknown = signer_rig(rig, "req-unknown", grant=False)
    try:
        set_agent_mode(rig, "signed")
        body = b""
        client = HttpClient()

        stale_header = sign_via(signer, "GET", "/svc/echo", body)
        fields = parse_signature_header(stale_header)
        backdated = stale_header.replace(
            f"ts={fields.timestamp_us}", f"ts={fields.timestamp_us - 3600_000_000}"
        )
        stale = client.request(
            "GET", "127.0.0.1", rig["proxy"].listen_port, "/svc/echo", b"",
            {protocol.SIGNED_REQUEST_HEADER: backdated},
        )
        assert stale.status == 403
        assert json.loads(stale.body)["reason"] == "stale-signature"

        foreign = sign_via(unknown, "GET", "/svc/echo", body)
        rejected = client.request(
            "GET", "127.0.0.1", rig["proxy"].listen_port, "/svc/echo", b"",
            {protocol.SIGNED_REQUEST_HEADER: foreign},
        )
        assert rejected.status == 403
        assert json.loads(rejected.body)["reason"] == "unbound-entity"

        # a valid header bound to another body fails the digest check
        mismatched = sign_via(signer, "GET", "/svc/echo", b"other-bytes")
        tampered = client.request(
            "GET", "127.0.0.1", rig["proxy"].listen_port, "/svc/echo", b"",
            {protocol.SIGNED_REQUEST_HEADER: mismatched},
        )
        assert tampered.status == 403
        assert json.loads(tampered.body)["reason"] == "bad-request-signature"
        client.close()
    finally:
        signer.stop()
        unknown.stop()


def test_replay_protection_off_is_detectably_weaker(rig):
    signer = signer_rig(rig, "req-signer-3")
    try:
        set_agent_mode(rig, "signed", replay_protection=False)
        header = sign_via(signer, "GET", "/svc/echo", b"")
        client = HttpClient()
        for _ in range(2):  # identical header sails through twice
            response = client.request(
                "GET", "127.0.0.1", rig["proxy"].listen_port, "/svc/echo", b"",
                {protocol.SIGNED_REQUEST_HEADER: header},
            )
            assert response.status == 200
        client.close()
    finally:
        signer.stop()


# --------------------------------------------------------------- baseline


def test_baseline_mode_skips_verification(rig):
    rig["proxy"].mode = "baseline"
    before = rig["agent"].stats.authz_calls
    seq = next_seq(rig)
    rogue = HttpClient(source_ip="127.31.99.77")  # would be denied in enforce mode
    response = rogue.request_json(
        "GET", "127.0.0.1", rig["proxy"].listen_port, "/svc/echo"
    )
    rogue.close()
    assert response.status == 200
    assert rig["agent"].stats.authz_calls == before
    record = records_after(rig, seq)[0]
    assert record["verify_ms"] == 0.0
    assert record["base_ms"] == pytest.approx(record["total_ms"])


# ---------------------------------------------------------------- capture


def test_capture_records_wire_bytes(rig):
    new_requester(rig, "req-capture", "127.31.99.5")
    admin = HttpClient()
    admin.request_json(
        "POST", "127.0.0.1", rig["proxy"].admin_port, "/admin/capture", {"enabled": True}
    )
    seq = next_seq(rig)
    client = HttpClient(source_ip="127.31.99.5")
    client.request_json(
        "POST", "127.0.0.1", rig["proxy"].listen_port, "/svc/echo", {"secret": "payload"}
    )
    client.close()
    record = records_after(rig, seq)[0]
    assert record["capture"] is not None
    assert b"payload" in bytes.fromhex(record["capture"]["request_body"])
    admin.request_json(
        "POST", "127.0.0.1", rig["proxy"].admin_port, "/admin/capture", {"enabled": False}
    )
    admin.close()


# ------------------------------------------------------------ nonce cache


def test_nonce_cache_window():
    cache = NonceCache(window_s=1.0)
    entity = b"\x01" * 32
    now = 1_000_000_000
    assert cache.admit(entity, "n1", now)
    assert not cache.admit(entity, "n1", now + 10)
    assert cache.admit(entity, "n2", now)
    assert cache.admit(b"\x02" * 32, "n1", now)
    # outside the window the pair is admissible again
    assert cache.admit(entity, "n1", now + 2_000_000)
