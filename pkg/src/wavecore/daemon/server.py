"""HTTP face of the key-holding agent.

Responses never carry private key material; sessions are addressed by
entity hash and identities only ever leave as public keys and digests.
"""

from .. import httpd
from ..authz.graph import ProofDecodeError, proof_from_wire
from ..httpd import HttpError, Router
from .service import DaemonService, ServiceError

_STATUS = {
    "unknown-entity": 404,
    "unknown-subject": 404,
    "no-path": 404,
    "not-issuer": 403,
    "bad-attestation": 400,
}


def _hex32(value) -> bytes:
    try:
        raw = bytes.fromhex(str(value))
    except ValueError as e:
        raise HttpError(400, "bad-hex", str(e)) from e
    if len(raw) != 32:
        raise HttpError(400, "bad-hex", "expected 32 bytes")
    return raw


def _methods(value) -> frozenset:
    if not isinstance(value, list) or not all(isinstance(m, str) for m in value):
        raise HttpError(400, "bad-methods", "expected a list of method names")
    return frozenset(value)


def _wrap(call, *args, **kwargs):
    try:
        return call(*args, **kwargs)
    except ServiceError as e:
        raise HttpError(_STATUS.get(e.code, 500), e.code, e.reason) from e


class DaemonServer:
    def __init__(self, service: DaemonService, host: str, port: int):
        self.service = service
        router = Router()
        router.add("POST", "/v1/entity", self._entity)
        router.add("POST", "/v1/attest", self._attest)
        router.add("POST", "/v1/sync", self._sync)
        router.add("POST", "/v1/prove", self._prove)
        router.add("POST", "/v1/verify", self._verify)
        router.add("POST", "/v1/revoke", self._revoke)
        router.add("POST", "/v1/sign", self._sign)
        router.add("GET", "/healthz", lambda req: {"status": "ok"})
        self._server = httpd.start_server(host, port, router)
        self.host = host
        self.port = self._server.bound_port

    def stop(self) -> None:
        httpd.stop_server(self._server)

    # ----------------------------------------------------------- handlers

    def _entity(self, request):
        body = request.json()
        label = str(body.get("label", "")).strip()
        if not label:
            raise HttpError(400, "bad-label", "a non-empty label is required")
        session = _wrap(self.service.ensure_entity, label)
        return {
            "entity_hash": session.entity.hash_hex,
            "public_key": session.entity.public_key.hex(),
            "created_at_us": session.entity.created_at_us,
            "label": session.label,
        }

    def _attest(self, request):
        body = request.json()
        kwargs = {}
        if "ttl_s" in body:
            kwargs["ttl_s"] = int(body["ttl_s"])
        return _wrap(
            self.service.attest,
            _hex32(body.get("issuer_hash")),
            _hex32(body.get("subject_hash")),
            str(body.get("resource", "")),
            _methods(body.get("permissions")),
            **kwargs,
        )

    def _sync(self, request):
        return _wrap(self.service.sync, _hex32(request.json().get("entity_hash")))

    def _prove(self, request):
        body = request.json()
        requester = body.get("requester_hash")
        proof = _wrap(
            self.service.prove,
            _hex32(body.get("entity_hash")),
            _hex32(body.get("authorizer_hash")),
            str(body.get("resource", "")),
            _methods(body.get("needed")),
            _hex32(requester) if requester is not None else None,
        )
        return {"proof": proof.to_wire()}

    def _verify(self, request):
        body = request.json()
        try:
            proof = proof_from_wire(body.get("proof"))
        except ProofDecodeError:
            return {"ok": False, "reason": "malformed", "verify_ms": 0.0}
        return _wrap(
            self.service.verify,
            proof,
            _hex32(body.get("requester_hash")),
            _hex32(body.get("authorizer_hash")),
            str(body.get("resource", "")),
            _methods(body.get("needed")),
        )

    def _revoke(self, request):
        body = request.json()
        return _wrap(
            self.service.revoke,
            _hex32(body.get("entity_hash")),
            _hex32(body.get("attestation_hash")),
        )

    def _sign(self, request):
        body = request.json()
        return _wrap(
            self.service.sign_request,
            _hex32(body.get("entity_hash")),
            str(body.get("method", "")),
            str(body.get("path", "")),
            _hex32(body.get("body_sha256")),
        )
