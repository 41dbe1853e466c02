"""Canonical byte encodings for signed and content-addressed records.

Fields are written in a fixed order with explicit length prefixes so that any
two encoders produce identical bytes for identical values; see PROTOCOL.md
for the exact layouts.  Hashes and signatures are computed over these bytes,
so any change breaks stored material.
"""

from __future__ import annotations

import struct
from typing import Iterable

from . import protocol


class DecodeError(ValueError):
    pass


def u32(n: int) -> bytes:
    return struct.pack(">I", n)


def u64(n: int) -> bytes:
    return struct.pack(">Q", n)


def lp_bytes(b: bytes) -> bytes:
    return u32(len(b)) + b


def lp_str(s: str) -> bytes:
    return lp_bytes(s.encode("utf-8"))


def str_set(items: Iterable[str]) -> bytes:
    encoded = sorted(s.encode("utf-8") for s in items)
    return u32(len(encoded)) + b"".join(u32(len(e)) + e for e in encoded)


class Cursor:
    """Sequential reader with strict bounds checking."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise DecodeError("truncated record")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack(">I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self.take(8))[0]

    def lp_bytes(self) -> bytes:
        return self.take(self.u32())

    def lp_str(self) -> str:
        try:
            return self.lp_bytes().decode("utf-8")
        except UnicodeDecodeError as e:
            raise DecodeError(f"bad utf-8: {e}") from e

    def str_set(self) -> frozenset[str]:
        count = self.u32()
        if count > 4096:
            raise DecodeError("oversized set")
        return frozenset(self.take(self.u32()).decode("utf-8") for _ in range(count))

    def done(self) -> None:
        if self.pos != len(self.data):
            raise DecodeError("trailing bytes")


def _header(tag: int) -> bytes:
    return bytes((tag, protocol.VERSION))


def _check_header(cur: Cursor, tag: int) -> None:
    got = cur.take(2)
    if got[0] != tag:
        raise DecodeError(f"tag mismatch: {got[0]:#x} != {tag:#x}")
    if got[1] != protocol.VERSION:
        raise DecodeError(f"unsupported version {got[1]}")


def _hash32(h: bytes) -> bytes:
    if len(h) != protocol.HASH_LEN:
        raise ValueError("hash must be 32 bytes")
    return h


def attestation_body(
    issuer_hash: bytes,
    subject_hash: bytes,
    resource: str,
    permissions: Iterable[str],
    not_before_us: int,
    not_after_us: int,
) -> bytes:
    return (
        _header(protocol.TAG_ATTESTATION_BODY)
        + _hash32(issuer_hash)
        + _hash32(subject_hash)
        + lp_str(resource)
        + str_set(permissions)
        + u64(not_before_us)
        + u64(not_after_us)
    )


def decode_attestation_body(data: bytes) -> dict:
    cur = Cursor(data)
    _check_header(cur, protocol.TAG_ATTESTATION_BODY)
    out = {
        "issuer_hash": cur.take(32),
        "subject_hash": cur.take(32),
        "resource": cur.lp_str(),
        "permissions": cur.str_set(),
        "not_before_us": cur.u64(),
        "not_after_us": cur.u64(),
    }
    cur.done()
    return out


def attestation_record(
    attestation_hash: bytes,
    issuer_hash: bytes,
    subject_hash: bytes,
    sealed_body: bytes,
    signature: bytes,
) -> bytes:
    return (
        _header(protocol.TAG_ATTESTATION_RECORD)
        + _hash32(attestation_hash)
        + _hash32(issuer_hash)
        + _hash32(subject_hash)
        + lp_bytes(sealed_body)
        + lp_bytes(signature)
    )


def decode_attestation_record(data: bytes) -> dict:
    cur = Cursor(data)
    _check_header(cur, protocol.TAG_ATTESTATION_RECORD)
    out = {
        "attestation_hash": cur.take(32),
        "issuer_hash": cur.take(32),
        "subject_hash": cur.take(32),
        "sealed_body": cur.lp_bytes(),
        "signature": cur.lp_bytes(),
    }
    cur.done()
    return out


def revocation_record(
    attestation_hash: bytes,
    issuer_hash: bytes,
    revoked_at_us: int,
    signature: bytes,
) -> bytes:
    return (
        _header(protocol.TAG_REVOCATION_RECORD)
        + _hash32(attestation_hash)
        + _hash32(issuer_hash)
        + u64(revoked_at_us)
        + lp_bytes(signature)
    )


def decode_revocation_record(data: bytes) -> dict:
    cur = Cursor(data)
    _check_header(cur, protocol.TAG_REVOCATION_RECORD)
    out = {
        "attestation_hash": cur.take(32),
        "issuer_hash": cur.take(32),
        "revoked_at_us": cur.u64(),
        "signature": cur.lp_bytes(),
    }
    cur.done()
    return out


def revocation_sign_input(attestation_hash: bytes) -> bytes:
    return bytes((protocol.TAG_REVOCATION_SIGN,)) + _hash32(attestation_hash)


def request_sig_input(
    method: str, path: str, body_digest: bytes, nonce: str, timestamp_us: int
) -> bytes:
    return (
        _header(protocol.TAG_REQUEST_SIG)
        + lp_str(method)
        + lp_str(path)
        + _hash32(body_digest)
        + lp_str(nonce)
        + u64(timestamp_us)
    )
