"""Decentralized delegation graph: entities, attestations, proofs, revocation."""

from .entity import Entity, create_entity
from .attestation import Attestation, Revocation, issue_attestation, revoke, unseal_attestation
from .graph import PerspectiveGraph, Proof, build_proof
from .verify import VerifyResult, verify_proof

__all__ = [
    "Entity",
    "create_entity",
    "Attestation",
    "Revocation",
    "issue_attestation",
    "revoke",
    "unseal_attestation",
    "PerspectiveGraph",
    "Proof",
    "build_proof",
    "VerifyResult",
    "verify_proof",
]
