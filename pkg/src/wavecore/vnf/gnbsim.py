"""Radio-side simulator: drives attach and session flows against an AMF.

Plays the role of gNB + UE. SIM secrets live only here; the network side
never receives the key, only the challenge response derived from it.
"""

from __future__ import annotations

import time

from .. import crypto
from ..netutil import HttpClient, TransportError


class UeSimError(Exception):
    def __init__(self, status: int, code: str, reason: str = ""):
        super().__init__(f"{status} {code} {reason}".strip())
        self.status = status
        self.code = code
        self.reason = reason


class UeSim:
    """Client for an AMF's radio-facing driver endpoints."""

    def __init__(self, amf_host: str, amf_port: int, http: HttpClient | None = None):
        self.amf_host = amf_host
        self.amf_port = amf_port
        self.http = http or HttpClient(timeout=30.0)
        self._sims: dict[str, bytes] = {}
        self._session_keys: dict[str, bytes] = {}

    def provision(self, supi: str, key: bytes) -> None:
        """Load a SIM: the shared secret also seeded into the subscriber DB."""
        self._sims[supi] = key

    def attach(self, supi: str, key: bytes | None = None) -> dict:
        """Authenticate: fetch the challenge, answer it with the SIM key.

        The response proves key possession (hash of challenge and key);
        the key itself never leaves this process.
        """
        if key is None:
            key = self._sims.get(supi)
        if key is None:
            raise UeSimError(0, "no-sim", f"no key provisioned for {supi}")
        challenge = self._post("/ran/attach/initiate", {"supi": supi})
        rand = bytes.fromhex(challenge["rand"])
        res = crypto.digest(rand + key)
        outcome = self._post("/ran/attach/confirm", {"supi": supi, "res": res.hex()})
        self._session_keys[supi] = crypto.digest(key + rand)
        return {**outcome, "rand": challenge["rand"]}

    def pdu_session(self, supi: str, session_id) -> dict:
        return self._post("/ran/pdu-session", {"supi": supi, "session_id": session_id})

    def full_attach(self, supi: str, session_id=1, register: bool = True) -> dict:
        """Drive registration → authentication → session establishment.

        Returns a per-step report instead of raising; a failed step ends
        the flow with `ok=False` and the failure recorded on that step.
        """
        steps = []

        def run(name, fn):
            started = time.perf_counter()
            try:
                outcome = fn()
            except UeSimError as e:
                steps.append({
                    "step": name, "ok": False,
                    "ms": (time.perf_counter() - started) * 1000.0,
                    "status": e.status, "code": e.code,
                })
                return False
            steps.append({
                "step": name, "ok": True,
                "ms": (time.perf_counter() - started) * 1000.0,
                "detail": outcome,
            })
            return True

        flow = []
        if register:
            flow.append(("register-nf", lambda: self._post("/driver/register-nf", {})))
        flow.append(("authenticate", lambda: self.attach(supi)))
        flow.append(("pdu-session", lambda: self.pdu_session(supi, session_id)))
        ok = True
        for name, fn in flow:
            if not run(name, fn):
                ok = False
                break
        return {"supi": supi, "ok": ok, "steps": steps}

    def session_key(self, supi: str) -> bytes | None:
        """The key this side derived during the last successful attach."""
        return self._session_keys.get(supi)

    def close(self) -> None:
        self.http.close()

    def _post(self, path: str, payload: dict) -> dict:
        try:
            response = self.http.request_json(
                "POST", self.amf_host, self.amf_port, path, payload
            )
        except TransportError as e:
            raise UeSimError(503, "amf-unreachable", str(e)) from e
        try:
            data = response.json() or {}
        except ValueError:
            data = {}
        if response.status >= 400:
            raise UeSimError(
                response.status,
                data.get("code", f"http-{response.status}"),
                data.get("reason", ""),
            )
        return data
