"""Digest, signature, and sealing primitives.

One digest (SHA-256) and one signature scheme (ECDSA / NIST P-256 / SHA-256)
cover the whole protocol; sealing reuses the same curve via ephemeral ECDH +
HKDF-SHA256 + AES-256-GCM.  See PROTOCOL.md.
"""

from __future__ import annotations

import hashlib

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

import os

_CURVE = ec.SECP256R1()
_ECDSA = ec.ECDSA(hashes.SHA256())
_SEAL_INFO = b"wavecore-seal-v1"
_GCM_NONCE_LEN = 12


class SealError(ValueError):
    pass


def digest(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def new_signing_key() -> ec.EllipticCurvePrivateKey:
    return ec.generate_private_key(_CURVE)


def public_bytes(private_key: ec.EllipticCurvePrivateKey) -> bytes:
    return private_key.public_key().public_bytes(
        serialization.Encoding.X962, serialization.PublicFormat.CompressedPoint
    )


def load_public(pub: bytes) -> ec.EllipticCurvePublicKey:
    return ec.EllipticCurvePublicKey.from_encoded_point(_CURVE, pub)


def private_scalar_hex(private_key: ec.EllipticCurvePrivateKey) -> str:
    """Hex private scalar; only used for local persistence and leak tests."""
    return format(private_key.private_numbers().private_value, "064x")


def private_from_scalar_hex(scalar_hex: str) -> ec.EllipticCurvePrivateKey:
    return ec.derive_private_key(int(scalar_hex, 16), _CURVE)


def sign(private_key: ec.EllipticCurvePrivateKey, data: bytes) -> bytes:
    return private_key.sign(data, _ECDSA)


def verify_signature(public_key_bytes: bytes, signature: bytes, data: bytes) -> bool:
    try:
        load_public(public_key_bytes).verify(signature, data, _ECDSA)
        return True
    except (InvalidSignature, ValueError):
        return False


def _seal_key(shared_secret: bytes) -> bytes:
    return HKDF(
        algorithm=hashes.SHA256(), length=32, salt=None, info=_SEAL_INFO
    ).derive(shared_secret)


def seal(subject_public_bytes: bytes, plaintext: bytes) -> bytes:
    """Encrypt so that only the holder of the subject's private key can read."""
    eph = ec.generate_private_key(_CURVE)
    shared = eph.exchange(ec.ECDH(), load_public(subject_public_bytes))
    nonce = os.urandom(_GCM_NONCE_LEN)
    ct = AESGCM(_seal_key(shared)).encrypt(nonce, plaintext, None)
    eph_pub = eph.public_key().public_bytes(
        serialization.Encoding.X962, serialization.PublicFormat.CompressedPoint
    )
    return eph_pub + nonce + ct


def unseal(private_key: ec.EllipticCurvePrivateKey, blob: bytes) -> bytes:
    if len(blob) < 33 + _GCM_NONCE_LEN + 16:
        raise SealError("sealed blob too short")
    try:
        eph_pub = load_public(blob[:33])
    except ValueError as e:
        raise SealError(f"bad ephemeral key: {e}") from e
    shared = private_key.exchange(ec.ECDH(), eph_pub)
    nonce = blob[33 : 33 + _GCM_NONCE_LEN]
    ct = blob[33 + _GCM_NONCE_LEN :]
    try:
        return AESGCM(_seal_key(shared)).decrypt(nonce, ct, None)
    except InvalidTag as e:
        raise SealError("not sealed to this key") from e
