"""Subscriber-data function: builds challenge vectors, records auth results.

The challenge derivation is a deliberately simple stand-in with the same
shape as the real key agreement: a fresh 16-byte ``rand`` per vector, the
expected response ``SHA256(rand || key)`` and the session key
``SHA256(key || rand)``.  Both sides can recompute them from the long-term
key, and every run produces different values because ``rand`` is fresh.
"""

from __future__ import annotations

import secrets
import time

from ..crypto import digest
from ..httpd import Router
from .base import MeshError, VnfBase, relay


class UdmVnf(VnfBase):
    vnf_type = "udm"

    def __init__(self, config, clock=time.time):
        self._vectors = 0
        self._events = 0
        super().__init__(config, clock)

    def service_routes(self, router: Router) -> None:
        router.add(
            "POST",
            "/nudm-ueau/v1/{supi}/security-information/generate-auth-data",
            self._generate,
        )
        router.add("POST", "/nudm-ueau/v1/{supi}/auth-events", self._auth_event)

    # ----------------------------------------------------------- handlers

    def _generate(self, request):
        supi = request.params["supi"]
        try:
            subscription = self.mesh_json(
                "udr", "GET",
                f"/nudr-dr/v1/subscription-data/{supi}/authentication-subscription",
            )
            bumped = self.mesh_json(
                "udr", "PATCH",
                f"/nudr-dr/v1/subscription-data/{supi}/authentication-subscription",
                {"sqn": int(subscription["sqn"]) + 1},
            )
        except MeshError as e:
            raise relay(e) from e
        key = bytes.fromhex(subscription["key"])
        rand = secrets.token_bytes(16)
        self._vectors += 1
        return 201, {
            "supi": supi,
            "rand": rand.hex(),
            "expected_res": digest(rand + key).hex(),
            "session_key": digest(key + rand).hex(),
            "sqn": bumped["sqn"],
        }

    def _auth_event(self, request):
        supi = request.params["supi"]
        body = request.json()
        try:
            self.mesh_json(
                "udr", "GET",
                f"/nudr-dr/v1/subscription-data/{supi}/authentication-status",
            )
            recorded = self.mesh_json(
                "udr", "PUT",
                f"/nudr-dr/v1/subscription-data/{supi}/authentication-status",
                {
                    "status": str(body.get("result", "")),
                    "serving": str(body.get("serving", "")),
                },
            )
        except MeshError as e:
            raise relay(e) from e
        self._events += 1
        return 201, {"supi": supi, "auth_status": recorded["auth_status"]}

    def state(self) -> dict:
        return {"vectors_issued": self._vectors, "events_recorded": self._events}
