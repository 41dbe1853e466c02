"""Shared network-function plumbing.

Each function runs two listeners on its pod address:

* the *service* listener carries the core APIs and accepts traffic only
  from the pod's own interception proxy (enforced by the pod-gate header
  value that exists nowhere outside the pod), and
* the *driver* listener carries non-service interfaces — radio-side
  triggers, user-plane session setup, deployment hooks, and state
  introspection for tests.

Outbound calls to peer functions go through :meth:`mesh_json`, which binds
the pod address as TCP source (so providers can attribute the caller), and
in signed-identity mode attaches a per-request signature header minted by
the pod's grant/verify agent.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

from .. import crypto, httpd, protocol
from ..httpd import HttpError, Router
from ..netutil import HttpClient, TransportError


DEFAULT_SERVICE_TIME_S = 0.005


class MeshError(Exception):
    """A peer call failed; carries enough to relay the verdict."""

    def __init__(self, status: int, code: str, reason: str = ""):
        super().__init__(f"{status} {code} {reason}".strip())
        self.status = status
        self.code = code
        self.reason = reason


class _PacedRouter(Router):
    """Service router that models a fixed per-request processing time.

    The synthetic handlers answer in microseconds, so without this the
    constant cost of one sidecar hop would dominate every timing ratio;
    a nominal service time keeps the split between forwarding and
    authorization representative of functions that do real work.
    """

    def __init__(self, service_time_s: float):
        super().__init__()
        self.service_time_s = service_time_s

    def resolve(self, method: str, path: str):
        handler, params = super().resolve(method, path)
        if self.service_time_s <= 0:
            return handler, params

        def paced(request, _handler=handler):
            time.sleep(self.service_time_s)
            return _handler(request)

        return paced, params


@dataclass
class TargetRef:
    """Where a logical peer lives (already resolved to host/port)."""

    pod: str
    host: str
    port: int


@dataclass
class VnfConfig:
    vnf_type: str
    slice_domain: str
    pod: str                      # pod label, e.g. "slice1-amf"
    pod_ip: str
    service_port: int
    driver_port: int
    gate_value: str
    wscp_host: str
    wscp_port: int
    identity_mode: str = "ip"     # ip | signed | baseline
    service_time_s: float = DEFAULT_SERVICE_TIME_S
    targets: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)


class VnfBase:
    vnf_type = "base"

    def __init__(self, config: VnfConfig, clock=time.time):
        self.config = config
        self.clock = clock
        self._client = HttpClient(source_ip=config.pod_ip, timeout=30.0)

        service_router = _PacedRouter(config.service_time_s)
        self.service_routes(service_router)
        # An empty gate value leaves the service listener open (used by rigs
        # that wire functions together without interception proxies).
        self._service_server = httpd.start_server(
            config.pod_ip, config.service_port, service_router,
            gate_header=protocol.POD_GATE_HEADER if config.gate_value else None,
            gate_value=config.gate_value,
        )

        driver_router = Router()
        self.driver_routes(driver_router)
        driver_router.add("GET", "/state", self._state)
        driver_router.add("GET", "/healthz", lambda req: {"status": "ok", "pod": config.pod})
        self._driver_server = httpd.start_server(
            config.pod_ip, config.driver_port, driver_router
        )

    @property
    def service_port(self) -> int:
        return self._service_server.bound_port

    @property
    def driver_port(self) -> int:
        return self._driver_server.bound_port

    def stop(self) -> None:
        httpd.stop_server(self._service_server)
        httpd.stop_server(self._driver_server)
        self._client.close()

    def now_us(self) -> int:
        return int(self.clock() * 1_000_000)

    def nf_profile(self, nf_type: str) -> dict:
        """Registry profile for this instance.

        The advertised address is where peers reach us — the interception
        proxy's public port when one fronts this pod (set via extras).
        """
        return {
            "nf_type": nf_type,
            "slice_domain": self.config.slice_domain,
            "address": self.config.extras.get(
                "public_address", f"{self.config.pod_ip}:{self.service_port}"
            ),
            "heartbeat_interval_s": self.config.extras.get("heartbeat_interval_s", 10.0),
        }

    # ------------------------------------------------------------ routing

    def service_routes(self, router: Router) -> None:
        """Core API endpoints (reached only through the interception proxy)."""

    def driver_routes(self, router: Router) -> None:
        """Non-service endpoints (radio/user-plane drivers, deploy hooks)."""

    def state(self) -> dict:
        return {}

    def _state(self, request):
        return {
            "pod": self.config.pod,
            "vnf_type": self.config.vnf_type,
            "slice_domain": self.config.slice_domain,
            **self.state(),
        }

    # ----------------------------------------------------------- outbound

    def mesh_json(self, target_name: str, method: str, path: str,
                  payload: dict | None = None) -> dict:
        """Call a peer function; raises MeshError for any non-2xx answer."""
        target = self.config.targets.get(target_name)
        if target is None:
            raise MeshError(500, "unknown-target", target_name)
        body = b"" if payload is None else json.dumps(payload).encode()
        headers = {}
        if payload is not None:
            headers["Content-Type"] = "application/json"
        if self.config.identity_mode == "signed":
            headers[protocol.SIGNED_REQUEST_HEADER] = self._sign(method, path, body)
        try:
            response = self._client.request(
                method, target.host, target.port, path, body, headers
            )
        except TransportError as e:
            raise MeshError(503, "peer-unreachable", f"{target_name}: {e}") from e
        try:
            data = response.json() or {}
        except ValueError:
            data = {}
        if response.status >= 400:
            raise MeshError(
                response.status,
                data.get("code", f"http-{response.status}"),
                data.get("reason", ""),
            )
        return data

    def _sign(self, method: str, path: str, body: bytes) -> str:
        try:
            response = self._client.request_json(
                "POST", self.config.wscp_host, self.config.wscp_port, "/sign-request",
                {
                    "method": method,
                    "target": path,
                    "body_sha256": crypto.digest(body).hex(),
                },
            )
        except TransportError as e:
            raise MeshError(503, "sign-unavailable", str(e)) from e
        if response.status != 200:
            raise MeshError(503, "sign-unavailable", response.body.decode(errors="replace"))
        return response.json()["header"]


def relay(e: MeshError) -> HttpError:
    """Turn a failed peer call into this function's own error response."""
    return HttpError(e.status, e.code, e.reason)
