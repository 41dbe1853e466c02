"""Access/mobility function: UE attach lifecycle and session orchestration.

UE contexts move ``idle -> challenged -> authenticated``.  Session setup
demands a *fresh* authentication: contexts older than the configured
``auth_max_age_s`` (extras) are treated as unauthenticated and refused
until the radio side re-runs the challenge.
"""

from __future__ import annotations

import threading
import time

from ..httpd import HttpError, Router
from .base import MeshError, VnfBase, relay


class AmfVnf(VnfBase):
    vnf_type = "amf"

    def __init__(self, config, clock=time.time):
        self._ue: dict[str, dict] = {}
        self._lock = threading.Lock()
        self._registered = False
        self.auth_max_age_s = float(config.extras.get("auth_max_age_s", 3600.0))
        super().__init__(config, clock)

    def service_routes(self, router: Router) -> None:
        router.add(
            "POST", "/namf-comm/v1/ue-contexts/{supi}/n1n2-messages", self._n1n2
        )

    def driver_routes(self, router: Router) -> None:
        router.add("POST", "/driver/register-nf", self._register_nf)
        router.add("POST", "/driver/heartbeat", self._heartbeat)
        router.add("POST", "/ran/attach/initiate", self._attach_initiate)
        router.add("POST", "/ran/attach/confirm", self._attach_confirm)
        router.add("POST", "/ran/pdu-session", self._pdu_session)

    # ------------------------------------------------------------ helpers

    def _fresh_authenticated(self, context: dict) -> bool:
        if context.get("state") != "authenticated":
            return False
        age_us = self.now_us() - context.get("authenticated_at_us", 0)
        return age_us <= self.auth_max_age_s * 1_000_000

    # ----------------------------------------------------- service handlers

    def _n1n2(self, request):
        supi = request.params["supi"]
        body = request.json()
        with self._lock:
            context = self._ue.get(supi)
            if context is None or not self._fresh_authenticated(context):
                raise HttpError(403, "ue-not-authenticated", supi)
            context.setdefault("n1n2_log", []).append({
                "message_type": str(body.get("message_type", "")),
                "session_id": body.get("session_id"),
                "received_at_us": self.now_us(),
            })
        return {"delivered": True, "supi": supi}

    # ------------------------------------------------------ driver handlers

    def _register_nf(self, request):
        try:
            profile = self.mesh_json(
                "nrf", "PUT",
                f"/nnrf-nfm/v1/nf-instances/{self.config.pod}",
                self.nf_profile("amf"),
            )
        except MeshError as e:
            raise relay(e) from e
        self._registered = True
        return profile

    def _heartbeat(self, request):
        try:
            return self.mesh_json(
                "nrf", "PATCH",
                f"/nnrf-nfm/v1/nf-instances/{self.config.pod}",
                {"status": "alive"},
            )
        except MeshError as e:
            raise relay(e) from e

    def _attach_initiate(self, request):
        body = request.json()
        supi = str(body.get("supi", ""))
        if not supi:
            raise HttpError(400, "bad-request", "supi required")
        try:
            challenge = self.mesh_json(
                "ausf", "POST", "/nausf-auth/v1/ue-authentications",
                {"supi": supi, "serving": self.config.pod},
            )
        except MeshError as e:
            raise relay(e) from e
        with self._lock:
            self._ue[supi] = {
                "supi": supi,
                "state": "challenged",
                "auth_ctx_id": challenge["auth_ctx_id"],
                "n1n2_log": self._ue.get(supi, {}).get("n1n2_log", []),
            }
        return {"supi": supi, "rand": challenge["rand"]}

    def _attach_confirm(self, request):
        body = request.json()
        supi = str(body.get("supi", ""))
        with self._lock:
            context = self._ue.get(supi)
        if context is None or context["state"] != "challenged":
            raise HttpError(409, "not-challenged", supi)
        try:
            outcome = self.mesh_json(
                "ausf", "PUT",
                f"/nausf-auth/v1/ue-authentications/{context['auth_ctx_id']}"
                "/5g-aka-confirmation",
                {"res": str(body.get("res", ""))},
            )
        except MeshError as e:
            if e.code == "authentication-failed":
                with self._lock:
                    context["state"] = "idle"
            raise relay(e) from e
        with self._lock:
            context["state"] = "authenticated"
            context["authenticated_at_us"] = self.now_us()
            context["session_key"] = outcome["session_key"]
        return {"supi": supi, "result": "authenticated"}

    def _pdu_session(self, request):
        body = request.json()
        supi = str(body.get("supi", ""))
        session_id = int(body.get("session_id", 1))
        with self._lock:
            context = self._ue.get(supi)
            if context is None or not self._fresh_authenticated(context):
                raise HttpError(403, "ue-not-authenticated", supi)
        try:
            created = self.mesh_json(
                "smf", "POST", "/nsmf-pdusession/v1/sm-contexts",
                {"supi": supi, "session_id": session_id, "serving": self.config.pod},
            )
            ref = created["sm_context_ref"]
            self.mesh_json(
                "smf", "POST", f"/nsmf-pdusession/v1/sm-contexts/{ref}/modify",
                {"upCnxState": "ACTIVATED"},
            )
        except MeshError as e:
            raise relay(e) from e
        with self._lock:
            context.setdefault("sessions", []).append(
                {"session_id": session_id, "sm_context_ref": ref}
            )
        return {"supi": supi, "established": True, "sm_context_ref": ref}

    def state(self) -> dict:
        with self._lock:
            return {
                "registered": self._registered,
                "auth_max_age_s": self.auth_max_age_s,
                "ue_contexts": {
                    supi: {k: v for k, v in ctx.items() if k != "session_key"}
                    for supi, ctx in self._ue.items()
                },
            }
