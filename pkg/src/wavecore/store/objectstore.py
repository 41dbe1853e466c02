"""Append-only content-addressed object store.

Objects are raw payloads addressed by their SHA-256 digest and appended as
JSON lines to a single file.  Every accepted object also becomes a leaf of a
Merkle log so clients can demand inclusion proofs.  The store never checks
signatures: it indexes just enough structure for lookups (which attestation
a revocation targets, which subject a sealed attestation is for) and treats
everything else as opaque bytes.

Reads go back to disk and re-hash the payload, so on-disk tampering turns
into an explicit ``corrupt-object`` error instead of silently served data.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from .. import encoding, protocol
from ..crypto import digest
from .merkle import MerkleLog

_KINDS = (protocol.KIND_ENTITY, protocol.KIND_ATTESTATION, protocol.KIND_REVOCATION)


class StoreError(Exception):
    def __init__(self, code: str, reason: str = ""):
        super().__init__(f"{code}: {reason}" if reason else code)
        self.code = code
        self.reason = reason


@dataclass
class StoredObject:
    seq: int
    object_id: bytes
    kind: str
    payload: bytes
    stored_at_us: int


@dataclass
class _IndexEntry:
    seq: int
    kind: str
    offset: int
    stored_at_us: int


class ObjectStore:
    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.path = self.directory / "objects.jsonl"
        self._lock = threading.Lock()
        self._by_id: dict[bytes, _IndexEntry] = {}
        self._by_seq: list[bytes] = []
        self._log = MerkleLog()
        self._revocations: dict[bytes, list[bytes]] = {}
        self._subjects: dict[bytes, list[bytes]] = {}
        self._load()
        self._file = open(self.path, "ab")

    # ----------------------------------------------------------- loading

    def _load(self) -> None:
        if not self.path.exists():
            return
        offset = 0
        with open(self.path, "rb") as fh:
            for line in fh:
                self._load_line(line, offset)
                offset += len(line)

    def _load_line(self, line: bytes, offset: int) -> None:
        try:
            row = json.loads(line)
            object_id = bytes.fromhex(row["id"])
            payload = bytes.fromhex(row["payload"])
            kind = row["kind"]
            stored_at_us = int(row["stored_at_us"])
        except (ValueError, KeyError, TypeError) as e:
            raise StoreError("corrupt-object", f"offset {offset}: {e}") from e
        if digest(payload) != object_id:
            raise StoreError("corrupt-object", f"offset {offset}: digest mismatch")
        self._admit(object_id, kind, payload, stored_at_us, offset)

    # ----------------------------------------------------------- writing

    def put(self, kind: str, payload: bytes) -> tuple[bytes, int, bool]:
        """Store a payload; returns (object id, seq, deduplicated)."""
        if kind not in _KINDS:
            raise StoreError("unknown-kind", kind)
        if len(payload) > protocol.MAX_OBJECT_BYTES:
            raise StoreError("object-too-large", f"{len(payload)} bytes")
        if not payload:
            raise StoreError("empty-object")
        object_id = digest(payload)
        with self._lock:
            existing = self._by_id.get(object_id)
            if existing is not None:
                return object_id, existing.seq, True
            self._validate_shape(kind, payload)
            stored_at_us = int(time.time() * 1_000_000)
            row = {
                "seq": len(self._by_seq),
                "id": object_id.hex(),
                "kind": kind,
                "payload": payload.hex(),
                "stored_at_us": stored_at_us,
            }
            offset = self._file.tell()
            self._file.write(json.dumps(row).encode() + b"\n")
            self._file.flush()
            os.fsync(self._file.fileno())
            seq = self._admit(object_id, kind, payload, stored_at_us, offset)
            return object_id, seq, False

    def _validate_shape(self, kind: str, payload: bytes) -> None:
        """Reject payloads the indexes could not make sense of."""
        try:
            if kind == protocol.KIND_REVOCATION:
                encoding.decode_revocation_record(payload)
            elif kind == protocol.KIND_ATTESTATION:
                encoding.decode_attestation_record(payload)
            elif kind == protocol.KIND_ENTITY:
                if len(payload) != protocol.PUBKEY_LEN:
                    raise encoding.DecodeError("bad public key length")
        except encoding.DecodeError as e:
            raise StoreError("malformed-object", str(e)) from e

    def _admit(self, object_id, kind, payload, stored_at_us, offset) -> int:
        seq = len(self._by_seq)
        self._by_seq.append(object_id)
        self._by_id[object_id] = _IndexEntry(seq, kind, offset, stored_at_us)
        self._log.append(object_id)
        if kind == protocol.KIND_REVOCATION:
            decoded = encoding.decode_revocation_record(payload)
            self._revocations.setdefault(decoded["attestation_hash"], []).append(object_id)
        elif kind == protocol.KIND_ATTESTATION:
            decoded = encoding.decode_attestation_record(payload)
            self._subjects.setdefault(decoded["subject_hash"], []).append(object_id)
        return seq

    # ----------------------------------------------------------- reading

    def get(self, object_id: bytes) -> StoredObject:
        with self._lock:
            entry = self._by_id.get(object_id)
        if entry is None:
            raise StoreError("not-found", object_id.hex())
        with open(self.path, "rb") as fh:
            fh.seek(entry.offset)
            line = fh.readline()
        try:
            payload = bytes.fromhex(json.loads(line)["payload"])
        except (ValueError, KeyError, TypeError) as e:
            raise StoreError("corrupt-object", f"seq {entry.seq}: {e}") from e
        if digest(payload) != object_id:
            raise StoreError("corrupt-object", f"seq {entry.seq}: digest mismatch")
        return StoredObject(entry.seq, object_id, entry.kind, payload, entry.stored_at_us)

    def inclusion(self, object_id: bytes) -> dict:
        with self._lock:
            entry = self._by_id.get(object_id)
            if entry is None:
                raise StoreError("not-found", object_id.hex())
            return {
                "leaf_index": entry.seq,
                "tree_size": len(self._log),
                "path": [h.hex() for h in self._log.inclusion(entry.seq)],
                "root": self._log.root().hex(),
            }

    def log_root(self) -> dict:
        with self._lock:
            return {"size": len(self._log), "root": self._log.root().hex()}

    def list(self, kind: str | None = None, after_seq: int = -1,
             subject: bytes | None = None, limit: int = 512) -> list[StoredObject]:
        with self._lock:
            if subject is not None:
                ids = list(self._subjects.get(subject, ()))
            else:
                ids = list(self._by_seq)
            entries = sorted(
                (self._by_id[i] for i in ids), key=lambda e: e.seq
            )
        out = []
        for entry in entries:
            if entry.seq <= after_seq:
                continue
            if kind is not None and entry.kind != kind:
                continue
            out.append(self.get(self._by_seq[entry.seq]))
            if len(out) >= limit:
                break
        return out

    def revocations_for(self, attestation_hash: bytes) -> list[StoredObject]:
        with self._lock:
            ids = list(self._revocations.get(attestation_hash, ()))
        return [self.get(i) for i in ids]

    def close(self) -> None:
        self._file.close()
