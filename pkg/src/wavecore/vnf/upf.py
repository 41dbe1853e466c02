"""User-plane function: session records over the driver-side interface.

The user-plane setup interface is not part of the service mesh, so these
endpoints live on the driver listener and are never intercepted.
"""

from __future__ import annotations

import threading
import time

from ..httpd import HttpError, Router
from .base import VnfBase


class UpfVnf(VnfBase):
    vnf_type = "upf"

    def __init__(self, config, clock=time.time):
        self._sessions: dict[str, dict] = {}
        self._lock = threading.Lock()
        super().__init__(config, clock)

    def driver_routes(self, router: Router) -> None:
        router.add("POST", "/n4/sessions", self._establish)
        router.add("POST", "/n4/sessions/{session_id}/modify", self._modify)

    def _establish(self, request):
        body = request.json()
        session_id = str(body.get("session_id", ""))
        if not session_id:
            raise HttpError(400, "bad-request", "session_id required")
        with self._lock:
            self._sessions[session_id] = {
                "session_id": session_id,
                "supi": str(body.get("supi", "")),
                "sm_context_ref": str(body.get("sm_context_ref", "")),
                "state": "established",
                "established_at_us": self.now_us(),
            }
        return 201, dict(self._sessions[session_id])

    def _modify(self, request):
        session_id = request.params["session_id"]
        with self._lock:
            session = self._sessions.get(session_id)
            if session is None:
                raise HttpError(404, "unknown-session", session_id)
            session["state"] = "modified"
            return dict(session)

    def state(self) -> dict:
        with self._lock:
            return {"sessions": {k: dict(v) for k, v in self._sessions.items()}}
