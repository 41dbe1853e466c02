"""Perspective graphs and proof construction.

A perspective graph holds the attestations one entity can read.  Proofs are
ordered attestation chains from an authorizer to a requester; construction
picks the shortest usable chain, breaking length ties by the lexicographic
order of the attestation-hash sequence so results are deterministic.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

from .. import crypto, encoding, protocol
from .attestation import Attestation


@dataclass
class PerspectiveGraph:
    """Attestations visible to one entity, indexed as delegation edges."""

    owner_hash: bytes
    edges: dict = field(default_factory=dict)  # (issuer, subject) -> {hash: Attestation}
    revoked: set = field(default_factory=set)  # attestation hashes
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def add(self, att: Attestation) -> bool:
        with self._lock:
            key = (att.issuer_hash, att.subject_hash)
            bucket = self.edges.setdefault(key, {})
            if att.hash in bucket:
                return False
            bucket[att.hash] = att
            return True

    def mark_revoked(self, attestation_hash: bytes) -> None:
        with self._lock:
            self.revoked.add(attestation_hash)

    def find(self, attestation_hash: bytes) -> Attestation | None:
        with self._lock:
            for bucket in self.edges.values():
                if attestation_hash in bucket:
                    return bucket[attestation_hash]
        return None

    def snapshot(self) -> list[Attestation]:
        with self._lock:
            return [a for bucket in self.edges.values() for a in bucket.values()]

    def usable_edges(self, resource: str, needed: frozenset[str], now_us: int):
        """Edges that could appear in a proof for (resource, needed) at now."""
        out = {}
        for att in self.snapshot():
            if att.hash in self.revoked:
                continue
            if not att.valid_at(now_us):
                continue
            if att.resource != resource:
                continue
            if not needed <= att.permissions:
                continue
            out.setdefault(att.issuer_hash, []).append(att)
        return out


@dataclass(frozen=True)
class Proof:
    """Disclosed attestation chain authorizer→requester.

    granted_permissions is the intersection of permissions along the path
    (the full method set for the empty self-proof); verifiers recompute it.
    """

    requester_hash: bytes
    authorizer_hash: bytes
    resource: str
    granted_permissions: frozenset[str]
    path: tuple[Attestation, ...]

    def to_wire(self) -> dict:
        return {
            "requester_hash": self.requester_hash.hex(),
            "authorizer_hash": self.authorizer_hash.hex(),
            "resource": self.resource,
            "granted_permissions": sorted(self.granted_permissions),
            "path": [
                {
                    "issuer_hash": a.issuer_hash.hex(),
                    "subject_hash": a.subject_hash.hex(),
                    "resource": a.resource,
                    "permissions": sorted(a.permissions),
                    "not_before_us": a.not_before_us,
                    "not_after_us": a.not_after_us,
                    "signature": a.signature.hex(),
                    "issuer_public_key": a.issuer_public_key.hex(),
                }
                for a in self.path
            ],
        }


class ProofDecodeError(ValueError):
    pass


def _hex32(value) -> bytes:
    if not isinstance(value, str):
        raise ProofDecodeError("hash must be a hex string")
    try:
        raw = bytes.fromhex(value)
    except ValueError as e:
        raise ProofDecodeError(f"bad hex: {e}") from e
    if len(raw) != protocol.HASH_LEN:
        raise ProofDecodeError("hash must be 32 bytes")
    return raw


def proof_from_wire(wire: dict) -> Proof:
    if not isinstance(wire, dict):
        raise ProofDecodeError("proof must be an object")
    try:
        path = []
        for el in wire.get("path", ()):
            issuer_hash = _hex32(el["issuer_hash"])
            subject_hash = _hex32(el["subject_hash"])
            resource = str(el["resource"])
            permissions = frozenset(str(p) for p in el["permissions"])
            not_before_us = int(el["not_before_us"])
            not_after_us = int(el["not_after_us"])
            body = encoding.attestation_body(
                issuer_hash, subject_hash, resource, permissions, not_before_us, not_after_us
            )
            path.append(
                Attestation(
                    issuer_hash=issuer_hash,
                    subject_hash=subject_hash,
                    resource=resource,
                    permissions=permissions,
                    not_before_us=not_before_us,
                    not_after_us=not_after_us,
                    signature=bytes.fromhex(el["signature"]),
                    issuer_public_key=bytes.fromhex(el["issuer_public_key"]),
                    hash=crypto.digest(body),
                )
            )
        return Proof(
            requester_hash=_hex32(wire["requester_hash"]),
            authorizer_hash=_hex32(wire["authorizer_hash"]),
            resource=str(wire["resource"]),
            granted_permissions=frozenset(str(p) for p in wire["granted_permissions"]),
            path=tuple(path),
        )
    except ProofDecodeError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise ProofDecodeError(f"malformed proof: {e}") from e


def build_proof(
    graph: PerspectiveGraph,
    requester_hash: bytes,
    authorizer_hash: bytes,
    resource: str,
    needed,
    now_us: int,
    max_path: int = protocol.MAX_PROOF_PATH,
) -> Proof | None:
    """Shortest usable chain authorizer→requester, or None.

    Ties between equal-length chains break on the lexicographic order of
    their attestation-hash tuples.
    """
    needed = frozenset(needed)
    if requester_hash == authorizer_hash:
        return Proof(
            requester_hash=requester_hash,
            authorizer_hash=authorizer_hash,
            resource=resource,
            granted_permissions=frozenset(protocol.ALL_METHODS),
            path=(),
        )
    if not needed:
        return None
    by_issuer = graph.usable_edges(resource, needed, now_us)

    # breadth-first by level; each frontier entry is (node, path-tuple) and
    # frontiers stay hash-sorted so the first hit is the lexicographic min
    frontier: list[tuple[bytes, tuple[Attestation, ...]]] = [(authorizer_hash, ())]
    best_seen: dict[bytes, tuple] = {authorizer_hash: ()}
    for _ in range(max_path):
        candidates: dict[bytes, tuple[Attestation, ...]] = {}
        hits: list[tuple[Attestation, ...]] = []
        for node, path in frontier:
            for att in by_issuer.get(node, ()):  # node delegates to att.subject
                if att.subject_hash in best_seen:
                    continue
                new_path = path + (att,)
                if att.subject_hash == requester_hash:
                    hits.append(new_path)
                    continue
                cur = candidates.get(att.subject_hash)
                if cur is None or _path_key(new_path) < _path_key(cur):
                    candidates[att.subject_hash] = new_path
        if hits:
            best = min(hits, key=_path_key)
            granted = frozenset(protocol.ALL_METHODS)
            for att in best:
                granted &= att.permissions
            return Proof(
                requester_hash=requester_hash,
                authorizer_hash=authorizer_hash,
                resource=resource,
                granted_permissions=granted,
                path=best,
            )
        if not candidates:
            return None
        best_seen.update({n: () for n in candidates})
        frontier = sorted(candidates.items(), key=lambda kv: _path_key(kv[1]))
        frontier = [(n, p) for n, p in frontier]
    return None


def _path_key(path: tuple[Attestation, ...]) -> tuple[bytes, ...]:
    return tuple(a.hash for a in path)
