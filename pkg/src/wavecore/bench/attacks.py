"""Executable attack scenarios against a live deployment.

Five scenarios probe the enforcement properties the mesh is built for:

* ``code-injection-surface`` — captured sidecar exchanges carry no bearer
  tokens, token scopes, or other replay-ready credential fields at all.
* ``token-leakage``          — replaying a captured, previously authorized
  request verbatim from a fresh source is denied.
* ``credential-phishing``    — a process with no mesh identity calling a
  provider's public API never reaches the function behind the proxy.
* ``authz-flooding``         — a burst of bogus authorization queries at
  one slice's agent leaves a disjoint slice's latency bounded, and the
  registry exposes no token endpoint to flood in the first place.
* ``token-hijack-replay``    — with per-request signing, a hijacked
  request signature fails on both verbatim replay (nonce reuse) and
  transplantation onto a different request body.

Each scenario returns an :class:`AttackOutcome` whose pass flag is true
exactly when the observation matches the expectation, so forced negative
controls (replay cache disabled, enforcement disabled) read as failures.
"""

from __future__ import annotations

import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor

from .. import protocol
from ..crypto import digest
from ..netutil import HttpClient, TransportError
from ..vnf import UeSim, UeSimError
from .latency import ScenarioError, collect_records, pod_labels, snapshot_cursors
from .reports import AttackOutcome, judge

ATTACK_IDS = (
    "code-injection-surface",
    "token-leakage",
    "credential-phishing",
    "authz-flooding",
    "token-hijack-replay",
)

# Credential shapes that must never cross the wire anywhere in the mesh.
TOKEN_MARKERS = ("access_token", "bearer ", "client_secret", "token_scope",
                 "oauth")

DEFAULT_FLOOD_REQUESTS = 500
DEFAULT_FLOOD_WORKERS = 32

_DENIED_CODE = "authorization-denied"


def _first_slices(deployment) -> list:
    return list(deployment.spec.slices)


def _subscriber(deployment):
    subscribers = deployment.spec.subscribers
    if not subscribers:
        raise ScenarioError("attacks: deployment has no provisioned subscribers")
    return subscribers[0]


def _set_capture(deployment, enabled: bool) -> None:
    for label in pod_labels(deployment):
        deployment.rscp_admin_json(label, "POST", "/admin/capture",
                                   {"enabled": enabled})


def _captured_run(deployment, slice_domain: str, with_session: bool) -> list:
    """One full attach under wire capture; returns the records produced."""
    sub = _subscriber(deployment)
    info = deployment.pod_info(f"{slice_domain}-amf")
    cursors = snapshot_cursors(deployment)
    _set_capture(deployment, True)
    ue = UeSim(info["ip"], info["driver_port"])
    try:
        ue.provision(sub.supi, bytes.fromhex(sub.key))
        ue.attach(sub.supi)
        if with_session:
            ue.pdu_session(sub.supi, int(time.time()) % 100_000)
    except UeSimError as e:
        raise ScenarioError(f"attacks: capture run failed: {e}") from e
    finally:
        ue.close()
        _set_capture(deployment, False)
    records = collect_records(deployment, cursors)
    if not any(r.get("capture") for r in records):
        raise ScenarioError("attacks: wire capture produced nothing")
    return records


def _capture_text(record) -> str:
    capture = record.get("capture") or {}
    parts = []
    for name, value in (capture.get("request_headers") or {}).items():
        parts.append(f"{name}: {value}")
    for key in ("request_body", "response_body"):
        blob = capture.get(key)
        if blob:
            parts.append(bytes.fromhex(blob).decode("latin1"))
    return "\n".join(parts).lower()


def attack_code_injection_surface(deployment, slice_domain=None) -> AttackOutcome:
    """Scan every captured exchange of a full attach for credential fields."""
    domain = slice_domain or _first_slices(deployment)[0]
    records = _captured_run(deployment, domain, with_session=True)
    hits = []
    scanned = 0
    for record in records:
        if not record.get("capture"):
            continue
        scanned += 1
        text = _capture_text(record)
        hits.extend(
            f"{record['pod']} {record['method']} {record['path']}: {marker}"
            for marker in TOKEN_MARKERS if marker in text
        )
        headers = record["capture"].get("request_headers") or {}
        if any(name.lower() == "authorization" for name in headers):
            hits.append(f"{record['pod']}: authorization header present")
    observed = "present" if hits else "absent"
    detail = hits[0] if hits else f"scanned {scanned} exchanges"
    return judge("code-injection-surface", "absent", observed, detail)


def attack_token_leakage(deployment, slice_domain=None, replays: int = 5) -> AttackOutcome:
    """Replay captured authorized requests verbatim from a fresh source."""
    domain = slice_domain or _first_slices(deployment)[0]
    records = _captured_run(deployment, domain, with_session=False)
    authorized = [r for r in records
                  if r["verdict"] == "allowed" and r.get("capture")]
    if not authorized:
        raise ScenarioError("attacks: no authorized exchange captured")
    client = HttpClient(timeout=30.0)
    accepted = []
    try:
        for record in authorized[:replays]:
            info = deployment.pod_info(record["provider_label"])
            capture = record["capture"]
            body = bytes.fromhex(capture.get("request_body") or "")
            headers = dict(capture.get("request_headers") or {})
            headers.pop("host", None)
            headers.pop("content-length", None)
            try:
                response = client.request(
                    record["method"], info["ip"], info["public_port"],
                    record["path"], body, headers,
                )
            except TransportError:
                continue  # connection refused counts as denied
            if response.status != 403:
                accepted.append(
                    f"{record['method']} {record['path']} -> {response.status}"
                )
    finally:
        client.close()
    observed = "allowed" if accepted else "denied"
    detail = (accepted[0] if accepted
              else f"replayed {min(len(authorized), replays)} captured requests")
    return judge("token-leakage", "denied", observed, detail)


def _proxy_denied(response) -> bool:
    if response.status != 403:
        return False
    try:
        return (response.json() or {}).get("code") == _DENIED_CODE
    except ValueError:
        return False


def attack_credential_phishing(deployment, slice_domain=None) -> AttackOutcome:
    """Call provider APIs directly with no identity; nothing may answer."""
    domain = slice_domain or _first_slices(deployment)[0]
    nrf = deployment.pod_info("nrf")
    udr = deployment.pod_info(f"{domain}-udr")
    probes = (
        ("PUT", nrf, "/nnrf-nfm/v1/nf-instances/rogue-amf",
         json.dumps({"nf_type": "amf", "slice_domain": domain}).encode()),
        ("GET", nrf, "/nnrf-disc/v1/nf-instances?target-nf-type=udm", b""),
        ("GET", udr,
         "/nudr-dr/v1/subscription-data/imsi-0/authentication-subscription", b""),
    )
    client = HttpClient(timeout=30.0)
    reached = []
    try:
        for method, info, path, body in probes:
            headers = {"content-type": "application/json"} if body else {}
            try:
                response = client.request(method, info["ip"],
                                          info["public_port"], path, body, headers)
            except TransportError:
                continue  # refused outright: enforced
            if not _proxy_denied(response):
                reached.append(f"{method} {path} -> {response.status}")
    finally:
        client.close()
    observed = "denied" if not reached else "allowed"
    detail = reached[0] if reached else f"{len(probes)} rogue calls refused"
    return judge("credential-phishing", "denied", observed, detail)


def _p95(samples: list) -> float:
    ordered = sorted(samples)
    return ordered[int(0.95 * (len(ordered) - 1))]


def _victim_beats(deployment, domain: str, stop, samples: list,
                  pace_s: float = 0.004, cap: int = 2000) -> None:
    while not stop.is_set() and len(samples) < cap:
        started = time.perf_counter()
        deployment.driver_json(f"{domain}-smf", "POST", "/driver/heartbeat", {})
        samples.append((time.perf_counter() - started) * 1000.0)
        time.sleep(pace_s)


def _await_samples(samples: list, count: int, timeout_s: float) -> None:
    deadline = time.monotonic() + timeout_s
    while len(samples) < count and time.monotonic() < deadline:
        time.sleep(0.01)


def attack_authz_flooding(deployment,
                          flood_requests: int = DEFAULT_FLOOD_REQUESTS,
                          flood_workers: int = DEFAULT_FLOOD_WORKERS,
                          baseline_samples: int = 25,
                          p95_factor: float = 5.0) -> AttackOutcome:
    """Bogus authorization burst at one slice; a disjoint slice stays usable.

    The 5x p95 bound is this harness's operational threshold for "bounded".
    """
    slices = _first_slices(deployment)
    if len(slices) < 2:
        raise ScenarioError("attacks: flooding needs two slices")
    flood_domain, victim_domain = slices[0], slices[1]
    target = deployment.pod_info(f"{flood_domain}-amf")

    client = HttpClient(timeout=30.0)
    stop = threading.Event()
    beats: list = []
    victim = threading.Thread(
        target=_victim_beats,
        args=(deployment, victim_domain, stop, beats),
        daemon=True,
    )

    def bogus(i: int) -> None:
        client.request_json(
            "POST", target["ip"], target["wscp_port"], "/authz",
            {
                "source_ip": f"10.66.{i % 250}.{i % 199}",
                "method": "GET",
                "target": "/nowhere",
                "signature_header": f"v1;entity={'0' * 64};nonce=junk;ts=0;sig=00",
            },
        )

    try:
        victim.start()
        # the burst is short, so bracket it with sample-index snapshots and
        # compare the beats that overlapped it against the ones before it
        _await_samples(beats, baseline_samples, timeout_s=30.0)
        burst_from = len(beats)
        with ThreadPoolExecutor(max_workers=flood_workers) as pool:
            list(pool.map(bogus, range(flood_requests)))
        _await_samples(beats, burst_from + 5, timeout_s=30.0)
    finally:
        stop.set()
        victim.join()
        client.close()
    before, during = beats[:burst_from], beats[burst_from:]
    if len(before) < 5 or len(during) < 5:
        raise ScenarioError("attacks: victim produced too few samples")

    # the registry carries no token-granting endpoint — there is nothing
    # credential-shaped to flood
    probe = HttpClient(timeout=10.0)
    try:
        nrf = deployment.pod_info("nrf")
        token = probe.request("POST", nrf["ip"], nrf["public_port"],
                              "/oauth2/token", b"grant_type=client_credentials",
                              {"content-type": "application/x-www-form-urlencoded"})
        token_status = token.status
    except TransportError:
        token_status = 0
    finally:
        probe.close()

    ratio = _p95(during) / max(_p95(before), 1e-9)
    bounded = ratio < p95_factor and token_status in (0, 403, 404)
    detail = (f"victim p95 {_p95(before):.1f}ms -> {_p95(during):.1f}ms "
              f"(x{ratio:.2f}, bound x{p95_factor}); "
              f"token endpoint -> {token_status or 'refused'}")
    return judge("authz-flooding", "bounded",
                 "bounded" if bounded else "unbounded", detail)


def attack_token_hijack_replay(deployment, slice_domain=None) -> AttackOutcome:
    """Replay and transplant a hijacked request signature in signed mode."""
    domain = slice_domain or _first_slices(deployment)[0]
    if deployment.spec.identity != "signed" or deployment.spec.mode != "wave":
        return judge("token-hijack-replay", "denied", "inconclusive",
                     "needs a wave deployment with signed-request identity")
    amf_label = f"{domain}-amf"
    nrf = deployment.pod_info("nrf")
    target_path = f"/nnrf-nfm/v1/nf-instances/{amf_label}"
    body = json.dumps({"status": "alive"}).encode()
    signed = deployment.wscp_json(amf_label, "POST", "/sign-request", {
        "method": "PATCH",
        "target": target_path,
        "body_sha256": digest(body).hex(),
    })
    headers = {
        "content-type": "application/json",
        protocol.SIGNED_REQUEST_HEADER: signed["header"],
    }
    client = HttpClient(timeout=30.0)
    try:
        first = client.request("PATCH", nrf["ip"], nrf["public_port"],
                               target_path, body, headers)
        if first.status != 200:
            raise ScenarioError(
                f"attacks: hijacked request did not authorize ({first.status})"
            )
        replayed = client.request("PATCH", nrf["ip"], nrf["public_port"],
                                  target_path, body, headers)
        tampered = client.request(
            "PATCH", nrf["ip"], nrf["public_port"], target_path,
            json.dumps({"status": "alive", "load": 99}).encode(), headers,
        )
    finally:
        client.close()
    leaks = []
    if replayed.status != 403:
        leaks.append(f"verbatim replay -> {replayed.status}")
    if tampered.status != 403:
        leaks.append(f"transplanted signature -> {tampered.status}")
    observed = "denied" if not leaks else "allowed"
    detail = leaks[0] if leaks else "replay and transplant both refused"
    return judge("token-hijack-replay", "denied", observed, detail)


def set_replay_protection(deployment, provider_label: str, enabled: bool) -> None:
    """Toggle one agent's replay cache (forced-negative-control hook)."""
    info = deployment.wscp_json(provider_label, "GET", "/admin/grants")
    deployment.wscp_json(provider_label, "POST", "/admin/mode",
                         {"mode": info["mode"], "replay_protection": enabled})


def bench_attacks(deployment,
                  flood_requests: int = DEFAULT_FLOOD_REQUESTS,
                  flood_workers: int = DEFAULT_FLOOD_WORKERS) -> list:
    """Run all five scenarios; capture failure raises ScenarioError."""
    return [
        attack_code_injection_surface(deployment),
        attack_token_leakage(deployment),
        attack_credential_phishing(deployment),
        attack_authz_flooding(deployment, flood_requests, flood_workers),
        attack_token_hijack_replay(deployment),
    ]
