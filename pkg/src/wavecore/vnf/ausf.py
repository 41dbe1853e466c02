"""Authentication server function: challenge lifecycle and confirmation."""

from __future__ import annotations

import threading
import time

from ..httpd import HttpError, Router
from .base import MeshError, VnfBase, relay


class AusfVnf(VnfBase):
    vnf_type = "ausf"

    def __init__(self, config, clock=time.time):
        self._contexts: dict[str, dict] = {}
        self._counter = 0
        self._lock = threading.Lock()
        super().__init__(config, clock)

    def service_routes(self, router: Router) -> None:
        router.add("POST", "/nausf-auth/v1/ue-authentications", self._start)
        router.add(
            "PUT",
            "/nausf-auth/v1/ue-authentications/{ctx_id}/5g-aka-confirmation",
            self._confirm,
        )

    # ----------------------------------------------------------- handlers

    def _start(self, request):
        body = request.json()
        supi = str(body.get("supi", ""))
        if not supi:
            raise HttpError(400, "bad-request", "supi required")
        try:
            vector = self.mesh_json(
                "udm", "POST",
                f"/nudm-ueau/v1/{supi}/security-information/generate-auth-data",
                {"serving": str(body.get("serving", ""))},
            )
        except MeshError as e:
            raise relay(e) from e
        with self._lock:
            self._counter += 1
            ctx_id = f"authctx-{self._counter}"
            self._contexts[ctx_id] = {
                "supi": supi,
                "serving": str(body.get("serving", "")),
                "expected_res": vector["expected_res"],
                "session_key": vector["session_key"],
                "state": "challenged",
            }
        return 201, {"auth_ctx_id": ctx_id, "rand": vector["rand"]}

    def _confirm(self, request):
        ctx_id = request.params["ctx_id"]
        body = request.json()
        context = self._contexts.get(ctx_id)
        if context is None:
            raise HttpError(404, "unknown-auth-context", ctx_id)
        succeeded = str(body.get("res", "")) == context["expected_res"]
        try:
            self.mesh_json(
                "udm", "POST",
                f"/nudm-ueau/v1/{context['supi']}/auth-events",
                {
                    "result": "authenticated" if succeeded else "failed",
                    "serving": context["serving"],
                },
            )
        except MeshError as e:
            raise relay(e) from e
        with self._lock:
            context["state"] = "authenticated" if succeeded else "failed"
        if not succeeded:
            raise HttpError(401, "authentication-failed", context["supi"])
        return {
            "result": "authenticated",
            "supi": context["supi"],
            "session_key": context["session_key"],
        }

    def state(self) -> dict:
        with self._lock:
            return {
                "contexts": {
                    k: {
                        kk: vv for kk, vv in v.items()
                        if kk not in ("session_key", "expected_res")
                    }
                    for k, v in self._contexts.items()
                }
            }
