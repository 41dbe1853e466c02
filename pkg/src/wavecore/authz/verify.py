"""Proof verification: a pure function of the proof and expectations.

Clauses run in a fixed order (endpoints, signatures, chain links, validity,
revocation, permissions, resource) and the result carries the first failed
clause.  No private state is needed; all key material travels inside the
proof and the revocation lookup supplies store records.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

from .. import crypto, protocol
from .attestation import Attestation, Revocation, revocation_is_valid
from .graph import Proof

REASON_MALFORMED = "malformed"
REASON_ENDPOINT = "endpoint-mismatch"
REASON_SIGNATURE = "bad-signature"
REASON_CHAIN = "chain-broken"
REASON_VALIDITY = "outside-validity"
REASON_REVOKED = "revoked"
REASON_PERMISSIONS = "insufficient-permissions"
REASON_RESOURCE = "resource-mismatch"

RevocationLookup = Callable[[Attestation], Iterable[Revocation]]


@dataclass(frozen=True)
class VerifyResult:
    ok: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.ok


ACCEPT = VerifyResult(True)


def _reject(reason: str) -> VerifyResult:
    return VerifyResult(False, reason)


def verify_proof(
    proof: Proof,
    expected_requester: bytes,
    expected_authorizer: bytes,
    resource: str,
    needed,
    now_us: int,
    revocation_check: RevocationLookup | None = None,
) -> VerifyResult:
    needed = frozenset(needed)
    path = proof.path

    # (a) endpoints
    if proof.requester_hash != expected_requester:
        return _reject(REASON_ENDPOINT)
    if proof.authorizer_hash != expected_authorizer:
        return _reject(REASON_ENDPOINT)
    if proof.resource != resource:
        return _reject(REASON_ENDPOINT)
    if path:
        if path[0].issuer_hash != expected_authorizer:
            return _reject(REASON_ENDPOINT)
        if path[-1].subject_hash != expected_requester:
            return _reject(REASON_ENDPOINT)
    elif expected_requester != expected_authorizer:
        return _reject(REASON_ENDPOINT)

    # (b) signatures, including key-to-hash consistency
    for att in path:
        if len(att.issuer_public_key) != protocol.PUBKEY_LEN:
            return _reject(REASON_SIGNATURE)
        if crypto.digest(att.issuer_public_key) != att.issuer_hash:
            return _reject(REASON_SIGNATURE)
        if not crypto.verify_signature(att.issuer_public_key, att.signature, att.body_bytes()):
            return _reject(REASON_SIGNATURE)

    # (c) chain links
    if len(path) > protocol.MAX_PROOF_PATH:
        return _reject(REASON_CHAIN)
    for prev, nxt in zip(path, path[1:]):
        if prev.subject_hash != nxt.issuer_hash:
            return _reject(REASON_CHAIN)

    # (d) validity window
    for att in path:
        if not att.valid_at(now_us):
            return _reject(REASON_VALIDITY)

    # (e) revocation; the store is untrusted, so only revocations signed by
    # the attestation's own issuer count
    if revocation_check is not None:
        for att in path:
            for rev in revocation_check(att):
                if revocation_is_valid(rev, att):
                    return _reject(REASON_REVOKED)

    # (f) permissions: recompute the intersection and require the stated set
    # to match, so an inflated granted_permissions field cannot slip through
    granted = frozenset(protocol.ALL_METHODS)
    for att in path:
        granted &= att.permissions
    if proof.granted_permissions != granted:
        return _reject(REASON_PERMISSIONS)
    if not needed or not needed <= granted:
        return _reject(REASON_PERMISSIONS)

    # (g) resource coverage, exact match
    for att in path:
        if att.resource != resource:
            return _reject(REASON_RESOURCE)

    return ACCEPT
