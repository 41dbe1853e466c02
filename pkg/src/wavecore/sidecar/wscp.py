"""Grant/verify agent running beside one VNF.

The agent owns the VNF's delegation identity (through the key-holding
daemon), issues attestations to approved requesters at deployment time, and
answers the interception proxy's per-request authorization queries.  A
grant produces a ready-to-verify proof so the hot path is a single daemon
verification (which itself re-checks revocations against the store).

Identity modes:

* ``ip`` — the requester is the TCP source address recorded in its grant.
* ``signed`` — the requester presents a per-request signature header; the
  agent checks freshness, replay, and the signature against the public key
  captured at grant time.
* ``baseline`` — everything is allowed; exists to measure the cost of the
  authorization layer against a deployment without one.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field

from .. import crypto, httpd, protocol
from ..daemon import DaemonClient, DaemonClientError
from ..httpd import HttpError, Router
from ..store import StoreClient
from .signing import NonceCache, parse_signature_header, verify_signature_header

MODES = ("ip", "signed", "baseline")


@dataclass
class Binding:
    requester_hash: bytes
    label: str
    slice_domain: str
    source_ip: str
    resource: str
    permissions: frozenset
    attestation_hash: bytes
    proof_wire: dict
    public_key: bytes
    attest_ms: float


@dataclass
class AgentStats:
    grants: int = 0
    authz_calls: int = 0
    allowed: int = 0
    denied: int = 0
    by_reason: dict = field(default_factory=dict)

    def record(self, ok: bool, reason: str | None) -> None:
        self.authz_calls += 1
        if ok:
            self.allowed += 1
        else:
            self.denied += 1
            self.by_reason[reason or "unknown"] = self.by_reason.get(reason or "unknown", 0) + 1


class WscpAgent:
    def __init__(self, label: str, slice_domain: str, vnf_type: str,
                 daemon: DaemonClient, store: StoreClient,
                 mode: str = "ip", clock=time.time):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        self.label = label
        self.slice_domain = slice_domain
        self.vnf_type = vnf_type
        self.daemon = daemon
        self.store = store
        self.mode = mode
        self.clock = clock
        self.replay_protection = True
        created = daemon.ensure_entity(label)
        self.entity_hash = bytes.fromhex(created["entity_hash"])
        self.public_key = bytes.fromhex(created["public_key"])
        self._bindings: dict[bytes, Binding] = {}
        self._by_ip: dict[str, bytes] = {}
        self._nonces = NonceCache()
        self._lock = threading.Lock()
        self.stats = AgentStats()

    def _now_us(self) -> int:
        return int(self.clock() * 1_000_000)

    # -------------------------------------------------------------- grants

    def grant(self, requester_hash: bytes, label: str, slice_domain: str,
              source_ip: str, permissions=protocol.DEFAULT_PAIR_PERMISSIONS) -> Binding:
        """Attest the requester and precompute its proof for this provider.

        The resource names the requester's slice domain, so a provider shared
        across slices (the registry) scopes each grant to the caller's slice.
        """
        resource = protocol.resource_uri(slice_domain, self.vnf_type)
        permissions = frozenset(permissions)
        started = time.perf_counter()
        attested = self.daemon.attest(
            self.entity_hash, requester_hash, resource, permissions
        )
        proof = self.daemon.prove(
            self.entity_hash, self.entity_hash, resource, permissions,
            requester_hash=requester_hash,
        )
        attest_ms = (time.perf_counter() - started) * 1000.0
        public_key = self.store.get_payload(requester_hash)
        binding = Binding(
            requester_hash=requester_hash,
            label=label,
            slice_domain=slice_domain,
            source_ip=source_ip,
            resource=resource,
            permissions=permissions,
            attestation_hash=bytes.fromhex(attested["attestation_hash"]),
            proof_wire=proof,
            public_key=public_key,
            attest_ms=attest_ms,
        )
        with self._lock:
            self._bindings[requester_hash] = binding
            self._by_ip[source_ip] = requester_hash
            self.stats.grants += 1
        return binding

    def revoke_requester(self, requester_hash: bytes) -> dict:
        with self._lock:
            binding = self._bindings.get(requester_hash)
        if binding is None:
            raise KeyError(requester_hash.hex())
        return self.daemon.revoke(self.entity_hash, binding.attestation_hash)

    # ----------------------------------------------------------- hot path

    def authorize(self, source_ip: str, method: str, target: str,
                  body_sha256: bytes | None = None,
                  signature_header: str | None = None) -> dict:
        if body_sha256 is None:
            body_sha256 = crypto.digest(b"")
        started = time.perf_counter()
        ok, reason, requester_hash = self._authorize(
            source_ip, method, target, body_sha256, signature_header
        )
        verify_ms = (time.perf_counter() - started) * 1000.0
        with self._lock:
            self.stats.record(ok, reason)
        return {
            "ok": ok,
            "reason": reason,
            "requester_hash": requester_hash.hex() if requester_hash else None,
            "verify_ms": verify_ms,
        }

    def _authorize(self, source_ip, method, target, body_sha256, signature_header):
        if self.mode == "baseline":
            return True, None, None
        if self.mode == "signed":
            if not signature_header:
                return False, "missing-signature", None
            requester_hash = self._signed_identity(
                signature_header, method, target, body_sha256
            )
            if isinstance(requester_hash, tuple):  # (None, reason)
                return False, requester_hash[1], None
        else:
            requester_hash = self._by_ip.get(source_ip)
            if requester_hash is None:
                return False, "unbound-address", None
        binding = self._bindings.get(requester_hash)
        if binding is None:
            return False, "unbound-entity", requester_hash
        try:
            verdict = self.daemon.verify(
                binding.proof_wire, requester_hash, self.entity_hash,
                binding.resource, {method},
            )
        except DaemonClientError as e:
            return False, e.code, requester_hash
        return verdict["ok"], verdict["reason"], requester_hash

    def _signed_identity(self, header, method, target, body_sha256):
        """Entity hash on success, (None, reason) on failure."""
        try:
            claimed = parse_signature_header(header).entity_hash
        except ValueError:
            return (None, "bad-signature-header")
        binding = self._bindings.get(claimed)
        if binding is None:
            return (None, "unbound-entity")
        ok, reason, entity_hash = verify_signature_header(
            header, method, target, body_sha256, binding.public_key,
            self._now_us(),
            nonce_cache=self._nonces if self.replay_protection else None,
        )
        if not ok:
            return (None, reason)
        return entity_hash

    # ------------------------------------------------------------ outbound

    def sign_outbound(self, method: str, target: str, body_sha256: bytes) -> dict:
        return self.daemon.sign_request(self.entity_hash, method, target, body_sha256)

    # ------------------------------------------------------------- control

    def set_mode(self, mode: str, replay_protection: bool | None = None) -> None:
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        self.mode = mode
        if replay_protection is not None:
            self.replay_protection = replay_protection

    def bindings(self) -> list[Binding]:
        with self._lock:
            return list(self._bindings.values())


def _hex32(value) -> bytes:
    try:
        raw = bytes.fromhex(str(value))
    except ValueError as e:
        raise HttpError(400, "bad-hex", str(e)) from e
    if len(raw) != 32:
        raise HttpError(400, "bad-hex", "expected 32 bytes")
    return raw


class WscpServer:
    def __init__(self, agent: WscpAgent, host: str, port: int):
        self.agent = agent
        router = Router()
        router.add("POST", "/authz", self._authz)
        router.add("POST", "/sign-request", self._sign_request)
        router.add("GET", "/healthz", lambda req: {"status": "ok", "label": agent.label})
        router.add("POST", "/admin/grants", self._grant)
        router.add("GET", "/admin/grants", self._grants)
        router.add("POST", "/admin/mode", self._mode)
        router.add("POST", "/admin/revoke", self._revoke)
        router.add("GET", "/admin/stats", self._stats)
        self._server = httpd.start_server(host, port, router)
        self.host = host
        self.port = self._server.bound_port

    def stop(self) -> None:
        httpd.stop_server(self._server)

    def _authz(self, request):
        body = request.json()
        body_sha = body.get("body_sha256")
        return self.agent.authorize(
            source_ip=str(body.get("source_ip", "")),
            method=str(body.get("method", "")),
            target=str(body.get("target", "")),
            body_sha256=_hex32(body_sha) if body_sha else None,
            signature_header=body.get("signature_header"),
        )

    def _sign_request(self, request):
        body = request.json()
        try:
            return self.agent.sign_outbound(
                str(body.get("method", "")),
                str(body.get("target", "")),
                _hex32(body.get("body_sha256")),
            )
        except DaemonClientError as e:
            raise HttpError(502, e.code, e.reason) from e

    def _grant(self, request):
        body = request.json()
        permissions = body.get("permissions")
        try:
            binding = self.agent.grant(
                _hex32(body.get("requester_hash")),
                str(body.get("label", "")),
                str(body.get("slice_domain", "")),
                str(body.get("source_ip", "")),
                frozenset(permissions) if permissions else protocol.DEFAULT_PAIR_PERMISSIONS,
            )
        except DaemonClientError as e:
            raise HttpError(502, e.code, e.reason) from e
        return {
            "attestation_hash": binding.attestation_hash.hex(),
            "resource": binding.resource,
            "permissions": sorted(binding.permissions),
            "attest_ms": binding.attest_ms,
        }

    def _grants(self, request):
        return {
            "provider": self.agent.entity_hash.hex(),
            "mode": self.agent.mode,
            "grants": [
                {
                    "requester_hash": b.requester_hash.hex(),
                    "label": b.label,
                    "slice_domain": b.slice_domain,
                    "source_ip": b.source_ip,
                    "resource": b.resource,
                    "permissions": sorted(b.permissions),
                    "attestation_hash": b.attestation_hash.hex(),
                    "attest_ms": b.attest_ms,
                }
                for b in self.agent.bindings()
            ],
        }

    def _mode(self, request):
        body = request.json()
        try:
            self.agent.set_mode(
                str(body.get("mode", "")),
                body.get("replay_protection"),
            )
        except ValueError as e:
            raise HttpError(400, "bad-mode", str(e)) from e
        return {"mode": self.agent.mode, "replay_protection": self.agent.replay_protection}

    def _revoke(self, request):
        try:
            return self.agent.revoke_requester(_hex32(request.json().get("requester_hash")))
        except KeyError as e:
            raise HttpError(404, "unknown-requester", str(e)) from e
        except DaemonClientError as e:
            raise HttpError(502, e.code, e.reason) from e

    def _stats(self, request):
        stats = self.agent.stats
        return {
            "label": self.agent.label,
            "mode": self.agent.mode,
            "grants": stats.grants,
            "authz_calls": stats.authz_calls,
            "allowed": stats.allowed,
            "denied": stats.denied,
            "by_reason": dict(stats.by_reason),
        }
