"""Append-only SHA-256 Merkle tree over stored-object ids.

Leaves and interior nodes use distinct hash prefixes (0x00 / 0x01) so a leaf
can never be confused with a node.  The root of ``n`` leaves splits at the
largest power of two smaller than ``n``; the empty tree hashes the empty
string.  Inclusion paths are audit paths from a leaf to the root and can be
checked by :func:`verify_inclusion` with nothing but hashes.
"""

from ..crypto import digest

_LEAF = b"\x00"
_NODE = b"\x01"


def leaf_hash(object_id: bytes) -> bytes:
    return digest(_LEAF + object_id)


def node_hash(left: bytes, right: bytes) -> bytes:
    return digest(_NODE + left + right)


def _split_point(n: int) -> int:
    """Largest power of two strictly less than n (n >= 2)."""
    k = 1
    while k * 2 < n:
        k *= 2
    return k


def root_of(leaves) -> bytes:
    if not leaves:
        return digest(b"")
    if len(leaves) == 1:
        return leaves[0]
    k = _split_point(len(leaves))
    return node_hash(root_of(leaves[:k]), root_of(leaves[k:]))


def audit_path(index: int, leaves) -> list[bytes]:
    if index >= len(leaves) or index < 0:
        raise IndexError(f"leaf {index} of {len(leaves)}")
    if len(leaves) == 1:
        return []
    k = _split_point(len(leaves))
    if index < k:
        return audit_path(index, leaves[:k]) + [root_of(leaves[k:])]
    return audit_path(index - k, leaves[k:]) + [root_of(leaves[:k])]


def verify_inclusion(leaf: bytes, index: int, size: int,
                     path: list[bytes], root: bytes) -> bool:
    """Check that ``leaf`` sits at ``index`` in the tree of ``size`` leaves."""
    if index < 0 or index >= size:
        return False
    fn, sn = index, size - 1
    current = leaf
    for sibling in path:
        if sn == 0:
            return False
        if fn % 2 == 1 or fn == sn:
            current = node_hash(sibling, current)
            if fn % 2 == 0:
                while fn % 2 == 0 and fn != 0:
                    fn >>= 1
                    sn >>= 1
        else:
            current = node_hash(current, sibling)
        fn >>= 1
        sn >>= 1
    return sn == 0 and current == root


class MerkleLog:
    """Incrementally grown tree; caching only the leaf level keeps appends
    simple and recomputation O(n) — fine at the object counts involved."""

    def __init__(self):
        self._leaves: list[bytes] = []

    def __len__(self) -> int:
        return len(self._leaves)

    def append(self, object_id: bytes) -> int:
        self._leaves.append(leaf_hash(object_id))
        return len(self._leaves) - 1

    def root(self) -> bytes:
        return root_of(self._leaves)

    def inclusion(self, index: int) -> list[bytes]:
        return audit_path(index, self._leaves)
