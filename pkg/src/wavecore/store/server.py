"""HTTP face of the object store."""

from .. import httpd
from ..httpd import HttpError, Router
from .objectstore import ObjectStore, StoreError

_STATUS = {
    "not-found": 404,
    "object-too-large": 413,
    "unknown-kind": 400,
    "malformed-object": 400,
    "empty-object": 400,
    "corrupt-object": 500,
}


def _hex_bytes(value: str, length: int | None = 32) -> bytes:
    try:
        raw = bytes.fromhex(value)
    except ValueError as e:
        raise HttpError(400, "bad-hex", str(e)) from e
    if length is not None and len(raw) != length:
        raise HttpError(400, "bad-hex", f"expected {length} bytes")
    return raw


def _wrap(call, *args, **kwargs):
    try:
        return call(*args, **kwargs)
    except StoreError as e:
        raise HttpError(_STATUS.get(e.code, 500), e.code, e.reason) from e


class StoreServer:
    def __init__(self, store: ObjectStore, host: str, port: int):
        self.store = store
        router = Router()
        router.add("POST", "/objects", self._put)
        router.add("GET", "/objects", self._list)
        router.add("GET", "/objects/{id}", self._get)
        router.add("GET", "/objects/{id}/inclusion", self._inclusion)
        router.add("GET", "/revocations/{attestation_hash}", self._revocations)
        router.add("GET", "/log/root", self._root)
        router.add("GET", "/healthz", lambda req: {"status": "ok"})
        self._server = httpd.start_server(host, port, router)
        self.host = host
        self.port = self._server.bound_port

    def stop(self) -> None:
        httpd.stop_server(self._server)
        self.store.close()

    # ----------------------------------------------------------- handlers

    def _put(self, request):
        body = request.json()
        kind = body.get("kind")
        payload = _hex_bytes(str(body.get("payload", "")), None)
        object_id, seq, dedup = _wrap(self.store.put, kind, payload)
        status = 200 if dedup else 201
        return status, {
            "id": object_id.hex(),
            "seq": seq,
            "dedup": dedup,
            "log_size": self.store.log_root()["size"],
        }

    def _get(self, request):
        obj = _wrap(self.store.get, _hex_bytes(request.params["id"]))
        return {
            "id": obj.object_id.hex(),
            "seq": obj.seq,
            "kind": obj.kind,
            "payload": obj.payload.hex(),
            "stored_at_us": obj.stored_at_us,
        }

    def _inclusion(self, request):
        return _wrap(self.store.inclusion, _hex_bytes(request.params["id"]))

    def _list(self, request):
        query = request.query
        kind = query.get("kind")
        after_seq = int(query.get("after_seq", -1))
        limit = min(int(query.get("limit", 512)), 512)
        subject = _hex_bytes(query["subject"]) if "subject" in query else None
        objects = _wrap(self.store.list, kind, after_seq, subject, limit)
        return {
            "objects": [
                {
                    "id": o.object_id.hex(),
                    "seq": o.seq,
                    "kind": o.kind,
                    "payload": o.payload.hex(),
                }
                for o in objects
            ],
            "next_after_seq": objects[-1].seq if objects else after_seq,
        }

    def _revocations(self, request):
        objects = _wrap(
            self.store.revocations_for, _hex_bytes(request.params["attestation_hash"])
        )
        return {"revocations": [o.payload.hex() for o in objects]}

    def _root(self, request):
        return self.store.log_root()
