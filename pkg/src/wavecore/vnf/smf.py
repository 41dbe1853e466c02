"""Session-management function: SM contexts and user-plane wiring.

Creating an SM context synchronously validates the UE with its serving
access function (the N1/N2 transfer) before answering, and provisions the
user-plane session over the non-service driver interface.  SM contexts
move ``creating -> active -> updated``.
"""

from __future__ import annotations

import threading
import time

from ..httpd import HttpError, Router
from .base import MeshError, VnfBase, relay


class SmfVnf(VnfBase):
    vnf_type = "smf"

    def __init__(self, config, clock=time.time):
        self._contexts: dict[str, dict] = {}
        self._counter = 0
        self._lock = threading.Lock()
        self._registered = False
        super().__init__(config, clock)

    def service_routes(self, router: Router) -> None:
        router.add("POST", "/nsmf-pdusession/v1/sm-contexts", self._create)
        router.add("POST", "/nsmf-pdusession/v1/sm-contexts/{ref}/modify", self._modify)

    def driver_routes(self, router: Router) -> None:
        router.add("POST", "/driver/register-nf", self._register_nf)
        router.add("POST", "/driver/heartbeat", self._heartbeat)

    # ----------------------------------------------------- service handlers

    def _create(self, request):
        body = request.json()
        supi = str(body.get("supi", ""))
        session_id = int(body.get("session_id", 1))
        if not supi:
            raise HttpError(400, "bad-request", "supi required")
        with self._lock:
            self._counter += 1
            ref = f"smctx-{self._counter}"
            self._contexts[ref] = {
                "ref": ref,
                "supi": supi,
                "session_id": session_id,
                "state": "creating",
            }
        try:
            # the UE must hold a live, authenticated context before any
            # session resources are committed
            self.mesh_json(
                "amf", "POST", f"/namf-comm/v1/ue-contexts/{supi}/n1n2-messages",
                {
                    "message_type": "pdu-session-establishment-accept",
                    "session_id": session_id,
                },
            )
        except MeshError as e:
            with self._lock:
                self._contexts[ref]["state"] = "rejected"
            raise relay(e) from e
        try:
            self.mesh_json(
                "upf-n4", "POST", "/n4/sessions",
                {"session_id": session_id, "supi": supi, "sm_context_ref": ref},
            )
        except MeshError as e:
            with self._lock:
                self._contexts[ref]["state"] = "failed"
            raise relay(e) from e
        with self._lock:
            self._contexts[ref]["state"] = "active"
        return 201, {"sm_context_ref": ref, "state": "active"}

    def _modify(self, request):
        ref = request.params["ref"]
        with self._lock:
            context = self._contexts.get(ref)
            if context is None:
                raise HttpError(404, "unknown-sm-context", ref)
            if context["state"] not in ("active", "updated"):
                raise HttpError(409, "sm-context-not-active", ref)
            session_id = context["session_id"]
        try:
            self.mesh_json(
                "upf-n4", "POST", f"/n4/sessions/{session_id}/modify", {}
            )
        except MeshError as e:
            raise relay(e) from e
        with self._lock:
            context["state"] = "updated"
            return {"sm_context_ref": ref, "state": "updated"}

    # ------------------------------------------------------ driver handlers

    def _register_nf(self, request):
        try:
            subscription = self.mesh_json(
                "nrf", "POST", "/nnrf-nfm/v1/subscriptions",
                {"subscriber": self.config.pod, "nf_type_watch": "amf"},
            )
            profile = self.mesh_json(
                "nrf", "PUT",
                f"/nnrf-nfm/v1/nf-instances/{self.config.pod}",
                self.nf_profile("smf"),
            )
        except MeshError as e:
            raise relay(e) from e
        self._registered = True
        return {"subscription": subscription, "profile": profile}

    def _heartbeat(self, request):
        try:
            return self.mesh_json(
                "nrf", "PATCH",
                f"/nnrf-nfm/v1/nf-instances/{self.config.pod}",
                {"status": "alive"},
            )
        except MeshError as e:
            raise relay(e) from e

    def state(self) -> dict:
        with self._lock:
            return {
                "registered": self._registered,
                "sm_contexts": {k: dict(v) for k, v in self._contexts.items()},
            }
