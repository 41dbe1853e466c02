"""Attestations (signed delegation edges) and revocations.

An attestation's body is signed by the issuer and sealed to the subject;
only the stored record (hashes, sealed body, signature) is public.  The
attestation hash is the digest of the signed body, so everyone who can read
the body can recompute it.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from .. import crypto, encoding
from .entity import Entity


class AttestationError(ValueError):
    pass


@dataclass(frozen=True)
class Attestation:
    issuer_hash: bytes
    subject_hash: bytes
    resource: str
    permissions: frozenset[str]
    not_before_us: int
    not_after_us: int
    signature: bytes
    issuer_public_key: bytes
    hash: bytes

    @property
    def hash_hex(self) -> str:
        return self.hash.hex()

    def body_bytes(self) -> bytes:
        return encoding.attestation_body(
            self.issuer_hash,
            self.subject_hash,
            self.resource,
            self.permissions,
            self.not_before_us,
            self.not_after_us,
        )

    def valid_at(self, now_us: int) -> bool:
        return self.not_before_us <= now_us <= self.not_after_us


@dataclass(frozen=True)
class Revocation:
    attestation_hash: bytes
    issuer_hash: bytes
    revoked_at_us: int
    signature: bytes

    def record_bytes(self) -> bytes:
        return encoding.revocation_record(
            self.attestation_hash, self.issuer_hash, self.revoked_at_us, self.signature
        )


def issue_attestation(
    issuer: Entity,
    subject_public_key: bytes,
    resource: str,
    permissions,
    not_before_us: int,
    not_after_us: int,
) -> tuple[Attestation, bytes]:
    """Create a signed, subject-sealed attestation.

    Returns the in-memory attestation and the store record bytes.
    """
    permissions = frozenset(permissions)
    if not permissions:
        raise AttestationError("empty permission set")
    unknown = permissions - frozenset({"GET", "POST", "PUT", "PATCH", "DELETE"})
    if unknown:
        raise AttestationError(f"unknown methods: {sorted(unknown)}")
    if not_before_us >= not_after_us:
        raise AttestationError("not_before must precede not_after")
    if not resource:
        raise AttestationError("empty resource")
    priv = issuer.require_private()
    subject_hash = crypto.digest(subject_public_key)
    body = encoding.attestation_body(
        issuer.hash, subject_hash, resource, permissions, not_before_us, not_after_us
    )
    signature = crypto.sign(priv, body)
    att = Attestation(
        issuer_hash=issuer.hash,
        subject_hash=subject_hash,
        resource=resource,
        permissions=permissions,
        not_before_us=not_before_us,
        not_after_us=not_after_us,
        signature=signature,
        issuer_public_key=issuer.public_key,
        hash=crypto.digest(body),
    )
    sealed = crypto.seal(subject_public_key, body)
    record = encoding.attestation_record(
        att.hash, issuer.hash, subject_hash, sealed, signature
    )
    return att, record


def unseal_attestation(
    subject: Entity, record_bytes: bytes, issuer_public_key: bytes
) -> Attestation | None:
    """Recover the attestation from a stored record.

    Returns None when the record is not sealed to this entity.  Raises
    AttestationError when the record decrypts but its contents are
    inconsistent (wrong hash, endpoint mismatch, bad issuer key).
    """
    rec = encoding.decode_attestation_record(record_bytes)
    try:
        body = crypto.unseal(subject.require_private(), rec["sealed_body"])
    except crypto.SealError:
        return None
    fields = encoding.decode_attestation_body(body)
    if crypto.digest(body) != rec["attestation_hash"]:
        raise AttestationError("attestation hash does not match body")
    if fields["subject_hash"] != subject.hash:
        raise AttestationError("sealed body names a different subject")
    if fields["issuer_hash"] != rec["issuer_hash"]:
        raise AttestationError("issuer mismatch between record and body")
    if crypto.digest(issuer_public_key) != fields["issuer_hash"]:
        raise AttestationError("issuer public key does not match issuer hash")
    return Attestation(
        issuer_hash=fields["issuer_hash"],
        subject_hash=fields["subject_hash"],
        resource=fields["resource"],
        permissions=fields["permissions"],
        not_before_us=fields["not_before_us"],
        not_after_us=fields["not_after_us"],
        signature=rec["signature"],
        issuer_public_key=issuer_public_key,
        hash=rec["attestation_hash"],
    )


def revoke(issuer: Entity, attestation: Attestation, clock=time.time) -> tuple[Revocation, bytes]:
    """Issue a revocation for an attestation this entity issued."""
    if attestation.issuer_hash != issuer.hash:
        raise AttestationError("only the issuer may revoke")
    priv = issuer.require_private()
    sig = crypto.sign(priv, encoding.revocation_sign_input(attestation.hash))
    rev = Revocation(
        attestation_hash=attestation.hash,
        issuer_hash=issuer.hash,
        revoked_at_us=int(clock() * 1_000_000),
        signature=sig,
    )
    return rev, rev.record_bytes()


def revocation_is_valid(rev: Revocation, attestation: Attestation) -> bool:
    """A revocation counts only if signed by the revoked attestation's issuer."""
    if rev.attestation_hash != attestation.hash:
        return False
    if rev.issuer_hash != attestation.issuer_hash:
        return False
    return crypto.verify_signature(
        attestation.issuer_public_key,
        rev.signature,
        encoding.revocation_sign_input(attestation.hash),
    )
