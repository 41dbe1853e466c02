"""Entities: one P-256 keypair plus a digest identity."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .. import crypto


def now_us() -> int:
    return int(time.time() * 1_000_000)


@dataclass
class Entity:
    """A participant in the delegation graph.

    `hash` is the SHA-256 digest of the canonical public-key encoding, so it
    is recomputable by anyone holding the public record.  `private_key` is
    present only inside the component that created the entity.
    """

    hash: bytes
    public_key: bytes
    created_at_us: int
    private_key: object | None = field(default=None, repr=False)

    @property
    def hash_hex(self) -> str:
        return self.hash.hex()

    def public_payload(self) -> bytes:
        """The store payload for this entity; its digest is the entity hash."""
        return self.public_key

    def require_private(self):
        if self.private_key is None:
            raise PermissionError("entity has no private key in this process")
        return self.private_key


def create_entity(clock=time.time) -> Entity:
    priv = crypto.new_signing_key()
    pub = crypto.public_bytes(priv)
    return Entity(
        hash=crypto.digest(pub),
        public_key=pub,
        created_at_us=int(clock() * 1_000_000),
        private_key=priv,
    )


def entity_from_public(payload: bytes, created_at_us: int = 0) -> Entity:
    crypto.load_public(payload)  # validates the point encoding
    return Entity(hash=crypto.digest(payload), public_key=payload, created_at_us=created_at_us)
