"""Client for one or more object-store servers.

Writes are replicated to every configured endpoint (at least one must
accept); reads fail over to the first endpoint that answers.  With a single
endpoint both degenerate to plain requests.
"""

from ..netutil import HttpClient, TransportError


class StoreClientError(Exception):
    def __init__(self, code: str, reason: str = ""):
        super().__init__(f"{code}: {reason}" if reason else code)
        self.code = code
        self.reason = reason


class StoreClient:
    def __init__(self, endpoints, http: HttpClient | None = None):
        if not endpoints:
            raise ValueError("at least one store endpoint required")
        self.endpoints = [(host, int(port)) for host, port in endpoints]
        self.http = http or HttpClient()

    # ----------------------------------------------------------- plumbing

    def _read(self, method: str, path: str, payload=None):
        last: Exception = StoreClientError("unreachable")
        for host, port in self.endpoints:
            try:
                return self._call(host, port, method, path, payload)
            except TransportError as e:
                last = e
        if isinstance(last, StoreClientError):
            raise last
        raise StoreClientError("unreachable", str(last))

    def _call(self, host, port, method, path, payload):
        response = self.http.request_json(method, host, port, path, payload)
        body = response.json() or {}
        if response.status >= 400:
            raise StoreClientError(
                body.get("code", f"http-{response.status}"), body.get("reason", "")
            )
        return body

    # ------------------------------------------------------------ writes

    def put_object(self, kind: str, payload: bytes) -> dict:
        result = None
        rejection: StoreClientError | None = None
        transport: list[str] = []
        for host, port in self.endpoints:
            try:
                value = self._call(
                    host, port, "POST", "/objects",
                    {"kind": kind, "payload": payload.hex()},
                )
                if result is None:
                    result = value
            except StoreClientError as e:
                rejection = rejection or e
            except TransportError as e:
                transport.append(f"{host}:{port}: {e}")
        if result is not None:
            return result
        if rejection is not None:
            raise rejection  # a live server refused: surface its verdict
        raise StoreClientError("put-failed", "; ".join(transport))

    # ------------------------------------------------------------- reads

    def get_object(self, object_id: bytes) -> dict:
        return self._read("GET", f"/objects/{object_id.hex()}")

    def get_payload(self, object_id: bytes) -> bytes:
        return bytes.fromhex(self.get_object(object_id)["payload"])

    def inclusion(self, object_id: bytes) -> dict:
        return self._read("GET", f"/objects/{object_id.hex()}/inclusion")

    def list_objects(self, kind: str | None = None, after_seq: int = -1,
                     subject: bytes | None = None, limit: int = 512) -> list[dict]:
        query = [f"after_seq={after_seq}", f"limit={limit}"]
        if kind:
            query.append(f"kind={kind}")
        if subject is not None:
            query.append(f"subject={subject.hex()}")
        return self._read("GET", "/objects?" + "&".join(query))["objects"]

    def revocations_for(self, attestation_hash: bytes) -> list[bytes]:
        body = self._read("GET", f"/revocations/{attestation_hash.hex()}")
        return [bytes.fromhex(p) for p in body["revocations"]]

    def log_root(self) -> dict:
        return self._read("GET", "/log/root")
