"""Per-request signature headers and replay protection.

Header shape::

    v1;entity=<hex32>;nonce=<hex>;ts=<epoch-us>;sig=<der-hex>

The signature covers (method, request target, body digest, nonce, timestamp)
under the canonical request-signature encoding, binding one header to one
concrete request.  A freshness window bounds clock skew and the nonce cache
refuses a (entity, nonce) pair it has already admitted inside that window.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

from .. import crypto, encoding, protocol


@dataclass
class SignatureFields:
    entity_hash: bytes
    nonce: str
    timestamp_us: int
    signature: bytes


def parse_signature_header(value: str) -> SignatureFields:
    parts = value.strip().split(";")
    if not parts or parts[0] != "v1":
        raise ValueError("unsupported signature header version")
    fields = {}
    for part in parts[1:]:
        name, _, field_value = part.partition("=")
        fields[name] = field_value
    try:
        entity_hash = bytes.fromhex(fields["entity"])
        nonce = fields["nonce"]
        timestamp_us = int(fields["ts"])
        signature = bytes.fromhex(fields["sig"])
    except (KeyError, ValueError) as e:
        raise ValueError(f"bad signature header: {e}") from e
    if len(entity_hash) != protocol.HASH_LEN or not nonce or not signature:
        raise ValueError("bad signature header fields")
    return SignatureFields(entity_hash, nonce, timestamp_us, signature)


class NonceCache:
    """Remembers (entity, nonce) pairs for the freshness window."""

    def __init__(self, window_s: float = protocol.SIGNED_REQUEST_WINDOW_S):
        self.window_us = int(window_s * 1_000_000)
        self._seen: dict[tuple[bytes, str], int] = {}
        self._lock = threading.Lock()

    def admit(self, entity_hash: bytes, nonce: str, now_us: int) -> bool:
        """True the first time, False on replay within the window."""
        key = (entity_hash, nonce)
        with self._lock:
            horizon = now_us - self.window_us
            if len(self._seen) > 4096:
                self._seen = {k: t for k, t in self._seen.items() if t >= horizon}
            seen_at = self._seen.get(key)
            if seen_at is not None and seen_at >= horizon:
                return False
            self._seen[key] = now_us
            return True


def verify_signature_header(
    header: str,
    method: str,
    target: str,
    body_sha256: bytes,
    public_key: bytes,
    now_us: int,
    window_s: float = protocol.SIGNED_REQUEST_WINDOW_S,
    nonce_cache: NonceCache | None = None,
) -> tuple[bool, str | None, bytes | None]:
    """Returns (ok, reason, entity_hash); the reason names the first failure."""
    try:
        fields = parse_signature_header(header)
    except ValueError:
        return False, "bad-signature-header", None
    window_us = int(window_s * 1_000_000)
    if abs(now_us - fields.timestamp_us) > window_us:
        return False, "stale-signature", fields.entity_hash
    message = encoding.request_sig_input(
        method, target, body_sha256, fields.nonce, fields.timestamp_us
    )
    if not crypto.verify_signature(public_key, fields.signature, message):
        return False, "bad-request-signature", fields.entity_hash
    if nonce_cache is not None and not nonce_cache.admit(
        fields.entity_hash, fields.nonce, now_us
    ):
        return False, "replay", fields.entity_hash
    return True, None, fields.entity_hash
