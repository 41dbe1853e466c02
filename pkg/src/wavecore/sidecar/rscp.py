"""Inbound interception proxy fronting one VNF.

Every request to the VNF's public address lands here first.  The proxy asks
the grant/verify agent whether the caller may perform (method, path), then
either forwards to the VNF's gated internal listener or answers 403.  Each
request leaves exactly one :class:`InterceptRecord` carrying the timing
split used by the benchmarks:

* ``total_ms``   — full proxy residence time of the request,
* ``verify_ms``  — authorization duration as reported by the agent,
* ``base_ms``    — ``total`` minus the proxy-observed authorization window,
  i.e. what the request would have cost without the authorization layer.

In ``enforce`` mode the agent is consulted on every request; in ``baseline``
mode the proxy forwards immediately (``verify_ms`` 0), which is the no-
authorization deployment the overhead numbers compare against.

Records sit in a bounded ring readable—together with optional captured
wire bytes—through a separate admin listener that is never exposed on the
proxied address.
"""

from __future__ import annotations

import json
import threading
import time
from collections import deque
from dataclasses import dataclass, field

from .. import httpd, protocol
from ..crypto import digest
from ..httpd import HttpError, Response, Router
from ..netutil import HttpClient, TransportError

_CAPTURE_BYTES = 8192
_FORWARD_HEADERS = ("content-type",)


@dataclass
class InterceptRecord:
    seq: int
    pod: str
    started_us: int
    finished_us: int
    total_ms: float
    verify_ms: float
    base_ms: float
    method: str
    path: str
    status: int
    verdict: str  # allowed | denied | error
    reason: str | None
    requester_hash: str | None
    source_ip: str
    capture: dict | None = None

    def to_wire(self) -> dict:
        return {
            "seq": self.seq,
            "pod": self.pod,
            "started_us": self.started_us,
            "finished_us": self.finished_us,
            "total_ms": self.total_ms,
            "verify_ms": self.verify_ms,
            "base_ms": self.base_ms,
            "method": self.method,
            "path": self.path,
            "status": self.status,
            "verdict": self.verdict,
            "reason": self.reason,
            "requester_hash": self.requester_hash,
            "source_ip": self.source_ip,
            "capture": self.capture,
        }


@dataclass
class _Ring:
    records: deque = field(default_factory=lambda: deque(maxlen=protocol.INTERCEPT_RING_SIZE))
    next_seq: int = 0
    allowed: int = 0
    denied: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)

    def append(self, make_record) -> InterceptRecord:
        with self.lock:
            record = make_record(self.next_seq)
            self.next_seq += 1
            self.records.append(record)
            if record.verdict == "allowed":
                self.allowed += 1
            elif record.verdict == "denied":
                self.denied += 1
            return record

    def since(self, since_seq: int, limit: int) -> list[InterceptRecord]:
        with self.lock:
            return [r for r in self.records if r.seq >= since_seq][:limit]


class RscpProxy:
    def __init__(self, pod: str, listen_host: str, listen_port: int,
                 upstream_host: str, upstream_port: int,
                 wscp_host: str, wscp_port: int,
                 admin_host: str, admin_port: int,
                 gate_value: str, mode: str = "enforce"):
        self.pod = pod
        self.upstream = (upstream_host, upstream_port)
        self.wscp = (wscp_host, wscp_port)
        self.gate_value = gate_value
        self.mode = mode
        self.capture_enabled = False
        self._ring = _Ring()
        self._client = HttpClient(timeout=30.0)

        proxy_router = Router()
        proxy_router.fallback(self._intercept)
        self._proxy_server = httpd.start_server(listen_host, listen_port, proxy_router)
        self.listen_host = listen_host
        self.listen_port = self._proxy_server.bound_port

        admin_router = Router()
        admin_router.add("GET", "/admin/records", self._records)
        admin_router.add("GET", "/admin/health", self._health)
        admin_router.add("POST", "/admin/capture", self._capture)
        admin_router.add("POST", "/admin/mode", self._mode)
        admin_router.add("GET", "/healthz", lambda req: {"status": "ok", "pod": pod})
        self._admin_server = httpd.start_server(admin_host, admin_port, admin_router)
        self.admin_host = admin_host
        self.admin_port = self._admin_server.bound_port

    def stop(self) -> None:
        httpd.stop_server(self._proxy_server)
        httpd.stop_server(self._admin_server)
        self._client.close()

    # --------------------------------------------------------- hot path

    def _intercept(self, request):
        started = time.perf_counter()
        started_us = int(time.time() * 1_000_000)
        verify_ms = 0.0
        observed_ms = 0.0
        verdict, reason, requester = "allowed", None, None

        if self.mode != "baseline":
            authz_payload = {
                "source_ip": request.client_ip,
                "method": request.method,
                "target": request.raw_target,
                "body_sha256": digest(request.body).hex(),
            }
            signature = request.headers.get(protocol.SIGNED_REQUEST_HEADER)
            if signature:
                authz_payload["signature_header"] = signature
            observe_start = time.perf_counter()
            try:
                response = self._client.request_json(
                    "POST", self.wscp[0], self.wscp[1], "/authz", authz_payload
                )
                answer = response.json() or {}
            except TransportError as e:
                return self._finish(
                    request, started, started_us, 0.0, 0.0,
                    "error", "agent-unreachable", None, 503,
                    body=_error_body("agent-unreachable", str(e)),
                )
            observed_ms = (time.perf_counter() - observe_start) * 1000.0
            verify_ms = float(answer.get("verify_ms") or 0.0)
            requester = answer.get("requester_hash")
            if not answer.get("ok"):
                verdict, reason = "denied", answer.get("reason")
                return self._finish(
                    request, started, started_us, verify_ms, observed_ms,
                    verdict, reason, requester, 403,
                    body=_error_body("authorization-denied", reason or ""),
                )

        try:
            upstream = self._forward(request, requester)
        except TransportError as e:
            return self._finish(
                request, started, started_us, verify_ms, observed_ms,
                "error", "upstream-unreachable", requester, 502,
                body=_error_body("upstream-unreachable", str(e)),
            )
        return self._finish(
            request, started, started_us, verify_ms, observed_ms,
            verdict, reason, requester, upstream.status,
            body=Response(
                status=upstream.status,
                body=upstream.body,
                content_type=upstream.headers.get("content-type", "application/json"),
            ),
            response_bytes=upstream.body,
        )

    def _forward(self, request, requester):
        headers = {protocol.POD_GATE_HEADER: self.gate_value}
        for name in _FORWARD_HEADERS:
            value = request.headers.get(name) or request.headers.get(name.title())
            if value:
                headers[name] = value
        if requester:
            headers["X-Requester-Hash"] = requester
        return self._client.request(
            request.method, self.upstream[0], self.upstream[1],
            request.raw_target, request.body, headers,
        )

    def _finish(self, request, started, started_us, verify_ms, observed_ms,
                verdict, reason, requester, status, body, response_bytes=b""):
        total_ms = (time.perf_counter() - started) * 1000.0
        capture = None
        if self.capture_enabled:
            capture = {
                "request_headers": dict(request.headers),
                "request_body": request.body[:_CAPTURE_BYTES].hex(),
                "response_body": response_bytes[:_CAPTURE_BYTES].hex(),
            }
        self._ring.append(lambda seq: InterceptRecord(
            seq=seq,
            pod=self.pod,
            started_us=started_us,
            finished_us=int(time.time() * 1_000_000),
            total_ms=total_ms,
            verify_ms=verify_ms,
            base_ms=total_ms - observed_ms,
            method=request.method,
            path=request.path,
            status=status,
            verdict=verdict,
            reason=reason,
            requester_hash=requester,
            source_ip=request.client_ip,
            capture=capture,
        ))
        return body

    # ------------------------------------------------------------- admin

    def _records(self, request):
        since_seq = int(request.query.get("since_seq", 0))
        limit = min(int(request.query.get("limit", 4096)), 4096)
        records = self._ring.since(since_seq, limit)
        return {
            "records": [r.to_wire() for r in records],
            "next_seq": self._ring.next_seq,
        }

    def _health(self, request):
        return {
            "pod": self.pod,
            "mode": self.mode,
            "count": self._ring.next_seq,
            "allowed": self._ring.allowed,
            "denied": self._ring.denied,
        }

    def _capture(self, request):
        self.capture_enabled = bool(request.json().get("enabled"))
        return {"enabled": self.capture_enabled}

    def _mode(self, request):
        mode = str(request.json().get("mode", ""))
        if mode not in ("enforce", "baseline"):
            raise HttpError(400, "bad-mode", mode)
        self.mode = mode
        return {"mode": self.mode}


def _error_body(code: str, reason: str) -> Response:
    return Response(
        status={"authorization-denied": 403,
                "agent-unreachable": 503,
                "upstream-unreachable": 502}[code],
        body=json.dumps({"code": code, "reason": reason}).encode(),
        content_type="application/json",
    )
