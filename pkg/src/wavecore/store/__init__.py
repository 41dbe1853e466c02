"""Content-addressed object storage with a Merkle accountability log."""

from .merkle import MerkleLog, leaf_hash, verify_inclusion
from .objectstore import ObjectStore, StoreError, StoredObject
from .server import StoreServer
from .client import StoreClient, StoreClientError

__all__ = [
    "MerkleLog",
    "leaf_hash",
    "verify_inclusion",
    "ObjectStore",
    "StoreError",
    "StoredObject",
    "StoreServer",
    "StoreClient",
    "StoreClientError",
]
