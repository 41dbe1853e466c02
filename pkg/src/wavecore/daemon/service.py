"""The agent that holds private keys and drives the authorization exchange.

One service instance manages any number of entity *sessions*.  A session
owns a keypair and a perspective graph fed from the shared object store:
``sync`` pulls sealed attestations addressed to the session's entity plus
every published revocation.  Sessions are persisted (scalar key material
included) to the service's state directory so a restarted host keeps its
identities; key material never leaves this process by any other path.

Proof verification always re-queries the store for revocations targeting
the attestations in the submitted chain, so a revocation published anywhere
takes effect on the next verify without waiting for a sync cycle.
"""

from __future__ import annotations

import json
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from .. import crypto, encoding, protocol
from ..authz import build_proof, verify_proof
from ..authz.attestation import (
    Attestation,
    AttestationError,
    Revocation,
    issue_attestation,
    revoke,
    unseal_attestation,
)
from ..authz.entity import Entity, create_entity, entity_from_public
from ..authz.graph import PerspectiveGraph, Proof
from ..store import StoreClient, StoreClientError


class ServiceError(Exception):
    def __init__(self, code: str, reason: str = ""):
        super().__init__(f"{code}: {reason}" if reason else code)
        self.code = code
        self.reason = reason


@dataclass
class Session:
    label: str
    entity: Entity
    graph: PerspectiveGraph
    attestation_cursor: int = -1
    lock: threading.Lock = field(default_factory=threading.Lock)


class DaemonService:
    def __init__(self, store: StoreClient, state_dir, clock=time.time):
        self.store = store
        self.clock = clock
        self.state_dir = Path(state_dir)
        self.state_dir.mkdir(parents=True, exist_ok=True)
        self._sessions_path = self.state_dir / "sessions.jsonl"
        self._sessions: dict[bytes, Session] = {}
        self._labels: dict[str, bytes] = {}
        self._revoked: set[bytes] = set()  # shared by every session graph
        self._revocation_cursor = -1
        self._lock = threading.Lock()
        self._load_sessions()

    def _now_us(self) -> int:
        return int(self.clock() * 1_000_000)

    # ----------------------------------------------------------- sessions

    def _load_sessions(self) -> None:
        if not self._sessions_path.exists():
            return
        for line in self._sessions_path.read_text().splitlines():
            row = json.loads(line)
            private = crypto.private_from_scalar_hex(row["scalar"])
            public = crypto.public_bytes(private)
            entity = Entity(
                hash=crypto.digest(public),
                public_key=public,
                created_at_us=int(row["created_at_us"]),
                private_key=private,
            )
            self._admit_session(row["label"], entity)

    def _admit_session(self, label: str, entity: Entity) -> Session:
        graph = PerspectiveGraph(owner_hash=entity.hash, revoked=self._revoked)
        session = Session(label=label, entity=entity, graph=graph)
        self._sessions[entity.hash] = session
        self._labels[label] = entity.hash
        return session

    def ensure_entity(self, label: str) -> Session:
        """Create the session for ``label`` or return the existing one."""
        with self._lock:
            existing = self._labels.get(label)
            if existing is not None:
                session = self._sessions[existing]
            else:
                entity = create_entity(self.clock)
                session = self._admit_session(label, entity)
                with open(self._sessions_path, "a") as fh:
                    fh.write(json.dumps({
                        "label": label,
                        "scalar": crypto.private_scalar_hex(entity.private_key),
                        "created_at_us": entity.created_at_us,
                    }) + "\n")
        self.store.put_object(protocol.KIND_ENTITY, session.entity.public_payload())
        return session

    def session(self, entity_hash: bytes) -> Session:
        session = self._sessions.get(entity_hash)
        if session is None:
            raise ServiceError("unknown-entity", entity_hash.hex())
        return session

    # -------------------------------------------------------- attestation

    def attest(self, issuer_hash: bytes, subject_hash: bytes, resource: str,
               permissions, ttl_s: int = protocol.ATTESTATION_TTL_S) -> dict:
        session = self.session(issuer_hash)
        subject_key = self._entity_public_key(subject_hash)
        now = self._now_us()
        try:
            att, record = issue_attestation(
                session.entity,
                subject_key,
                resource,
                permissions,
                now - 5_000_000,  # small backdate absorbs clock jitter
                now + ttl_s * 1_000_000,
            )
        except AttestationError as e:
            raise ServiceError("bad-attestation", str(e)) from e
        put = self.store.put_object(protocol.KIND_ATTESTATION, record)
        session.graph.add(att)  # the issuer knows what it just issued
        return {
            "attestation_hash": att.hash.hex(),
            "object_id": put["id"],
            "not_after_us": att.not_after_us,
        }

    def _entity_public_key(self, entity_hash: bytes):
        try:
            payload = self.store.get_payload(entity_hash)
        except StoreClientError as e:
            raise ServiceError("unknown-subject", entity_hash.hex()) from e
        return entity_from_public(payload, 0).public_key

    # --------------------------------------------------------------- sync

    def sync(self, entity_hash: bytes) -> dict:
        session = self.session(entity_hash)
        added = 0
        with session.lock:
            rows = self.store.list_objects(
                kind=protocol.KIND_ATTESTATION,
                after_seq=session.attestation_cursor,
                subject=entity_hash,
            )
            for row in rows:
                if self._ingest_attestation(session, bytes.fromhex(row["payload"])):
                    added += 1
                session.attestation_cursor = max(session.attestation_cursor, row["seq"])
        revocations = self._sync_revocations()
        return {"added": added, "revocations": revocations}

    def _ingest_attestation(self, session: Session, record: bytes) -> bool:
        envelope = encoding.decode_attestation_record(record)
        issuer_key = self._entity_public_key(envelope["issuer_hash"])
        att = unseal_attestation(session.entity, record, issuer_key)
        if att is None:
            return False
        return session.graph.add(att)

    def _sync_revocations(self) -> int:
        with self._lock:
            cursor = self._revocation_cursor
        rows = self.store.list_objects(kind=protocol.KIND_REVOCATION, after_seq=cursor)
        count = 0
        for row in rows:
            decoded = encoding.decode_revocation_record(bytes.fromhex(row["payload"]))
            with self._lock:
                self._revoked.add(decoded["attestation_hash"])
                self._revocation_cursor = max(self._revocation_cursor, row["seq"])
            count += 1
        return count

    # -------------------------------------------------------------- proofs

    def prove(self, entity_hash: bytes, authorizer_hash: bytes, resource: str,
              needed, requester_hash: bytes | None = None) -> Proof:
        """Build a proof from this session's perspective.

        By default the session entity is the requester; an authorizer session
        may instead name another entity as requester to hand it a proof over
        the edges this session issued.
        """
        session = self.session(entity_hash)
        requester = requester_hash if requester_hash is not None else entity_hash
        proof = build_proof(
            session.graph, requester, authorizer_hash, resource,
            frozenset(needed), self._now_us(),
        )
        if proof is None:
            raise ServiceError("no-path", f"{requester.hex()[:8]}<-{authorizer_hash.hex()[:8]}")
        return proof

    def verify(self, proof: Proof, requester_hash: bytes, authorizer_hash: bytes,
               resource: str, needed) -> dict:
        started = time.perf_counter()
        result = verify_proof(
            proof, requester_hash, authorizer_hash, resource,
            frozenset(needed), self._now_us(),
            revocation_check=self._live_revocations,
        )
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        return {"ok": result.ok, "reason": result.reason, "verify_ms": elapsed_ms}

    def _live_revocations(self, att: Attestation) -> list[Revocation]:
        try:
            payloads = self.store.revocations_for(att.hash)
        except StoreClientError:
            return []  # unreachable store: fall back to locally known facts
        out = []
        for payload in payloads:
            decoded = encoding.decode_revocation_record(payload)
            out.append(Revocation(
                attestation_hash=decoded["attestation_hash"],
                issuer_hash=decoded["issuer_hash"],
                revoked_at_us=decoded["revoked_at_us"],
                signature=decoded["signature"],
            ))
        return out

    # ---------------------------------------------------------- revocation

    def revoke(self, entity_hash: bytes, attestation_hash: bytes) -> dict:
        session = self.session(entity_hash)
        att = session.graph.find(attestation_hash)
        if att is None or att.issuer_hash != entity_hash:
            raise ServiceError("not-issuer", attestation_hash.hex())
        revocation, record = revoke(session.entity, att, clock=self.clock)
        put = self.store.put_object(protocol.KIND_REVOCATION, record)
        session.graph.mark_revoked(attestation_hash)
        return {"object_id": put["id"], "revoked_at_us": revocation.revoked_at_us}

    # ------------------------------------------------------ request signing

    def sign_request(self, entity_hash: bytes, method: str, path: str,
                     body_sha256: bytes) -> dict:
        session = self.session(entity_hash)
        nonce = secrets.token_hex(8)
        timestamp_us = self._now_us()
        message = encoding.request_sig_input(method, path, body_sha256, nonce, timestamp_us)
        signature = crypto.sign(session.entity.require_private(), message)
        header = (
            f"v1;entity={entity_hash.hex()};nonce={nonce};"
            f"ts={timestamp_us};sig={signature.hex()}"
        )
        return {"header": header, "nonce": nonce, "timestamp_us": timestamp_us}
