"""Client for the key-holding agent's HTTP interface."""

from ..netutil import HttpClient


class DaemonClientError(Exception):
    def __init__(self, code: str, reason: str = ""):
        super().__init__(f"{code}: {reason}" if reason else code)
        self.code = code
        self.reason = reason


class DaemonClient:
    def __init__(self, host: str, port: int, http: HttpClient | None = None):
        self.host = host
        self.port = int(port)
        self.http = http or HttpClient()

    def _post(self, path: str, payload: dict) -> dict:
        response = self.http.request_json("POST", self.host, self.port, path, payload)
        body = response.json() or {}
        if response.status >= 400:
            raise DaemonClientError(
                body.get("code", f"http-{response.status}"), body.get("reason", "")
            )
        return body

    def ensure_entity(self, label: str) -> dict:
        return self._post("/v1/entity", {"label": label})

    def attest(self, issuer_hash: bytes, subject_hash: bytes, resource: str,
               permissions, ttl_s: int | None = None) -> dict:
        payload = {
            "issuer_hash": issuer_hash.hex(),
            "subject_hash": subject_hash.hex(),
            "resource": resource,
            "permissions": sorted(permissions),
        }
        if ttl_s is not None:
            payload["ttl_s"] = ttl_s
        return self._post("/v1/attest", payload)

    def sync(self, entity_hash: bytes) -> dict:
        return self._post("/v1/sync", {"entity_hash": entity_hash.hex()})

    def prove(self, entity_hash: bytes, authorizer_hash: bytes, resource: str,
              needed, requester_hash: bytes | None = None) -> dict:
        payload = {
            "entity_hash": entity_hash.hex(),
            "authorizer_hash": authorizer_hash.hex(),
            "resource": resource,
            "needed": sorted(needed),
        }
        if requester_hash is not None:
            payload["requester_hash"] = requester_hash.hex()
        return self._post("/v1/prove", payload)["proof"]

    def verify(self, proof_wire: dict, requester_hash: bytes, authorizer_hash: bytes,
               resource: str, needed) -> dict:
        return self._post("/v1/verify", {
            "proof": proof_wire,
            "requester_hash": requester_hash.hex(),
            "authorizer_hash": authorizer_hash.hex(),
            "resource": resource,
            "needed": sorted(needed),
        })

    def revoke(self, entity_hash: bytes, attestation_hash: bytes) -> dict:
        return self._post("/v1/revoke", {
            "entity_hash": entity_hash.hex(),
            "attestation_hash": attestation_hash.hex(),
        })

    def sign_request(self, entity_hash: bytes, method: str, path: str,
                     body_sha256: bytes) -> dict:
        return self._post("/v1/sign", {
            "entity_hash": entity_hash.hex(),
            "method": method,
            "path": path,
            "body_sha256": body_sha256.hex(),
        })
