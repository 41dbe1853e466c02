"""Object store: Merkle log, persistence, tamper detection, HTTP surface."""

import hashlib
import json
import random

import pytest

from wavecore import encoding, protocol
from wavecore.authz import create_entity, issue_attestation, revoke
from wavecore.netutil import HttpClient, free_port, wait_for_health
from wavecore.store import (
    MerkleLog,
    ObjectStore,
    StoreClient,
    StoreClientError,
    StoreError,
    StoreServer,
    verify_inclusion,
)
from wavecore.store.merkle import leaf_hash

NOW = 1_700_000_000_000_000
HOUR = 3600 * 1_000_000


def sha(data):
    return hashlib.sha256(data).digest()


def oracle_root(object_ids):
    """Merkle root by iterative level reduction: pair left-to-right, odd
    node promotes unchanged.  Independent of the recursive split."""
    if not object_ids:
        return sha(b"")
    level = [sha(b"\x00" + i) for i in object_ids]
    while len(level) > 1:
        nxt = [
            sha(b"\x01" + level[k] + level[k + 1])
            for k in range(0, len(level) - 1, 2)
        ]
        if len(level) % 2 == 1:
            nxt.append(level[-1])
        level = nxt
    return level[0]


def rand_ids(rng, n):
    return [bytes(rng.randrange(256) for _ in range(32)) for _ in range(n)]


# ----------------------------------------------------------------- merkle


def test_root_matches_level_reduction_oracle():
    rng = random.Random(7)
    for n in range(0, 66):
        ids = rand_ids(rng, n)
        log = MerkleLog()
        for i in ids:
            log.append(i)
        assert log.root() == oracle_root(ids), f"divergence at {n} leaves"


def test_empty_root_is_hash_of_empty_string():
    assert MerkleLog().root() == sha(b"")


def test_inclusion_paths_verify_for_every_leaf():
    rng = random.Random(8)
    for n in [1, 2, 3, 5, 8, 13, 17, 64]:
        ids = rand_ids(rng, n)
        log = MerkleLog()
        for i in ids:
            log.append(i)
        root = log.root()
        for idx in range(n):
            path = log.inclusion(idx)
            assert verify_inclusion(leaf_hash(ids[idx]), idx, n, path, root)
            if n == 64:
                assert len(path) == 6


def test_inclusion_rejects_wrong_leaf_index_and_root():
    rng = random.Random(9)
    ids = rand_ids(rng, 10)
    log = MerkleLog()
    for i in ids:
        log.append(i)
    root = log.root()
    path = log.inclusion(3)
    assert verify_inclusion(leaf_hash(ids[3]), 3, 10, path, root)
    assert not verify_inclusion(leaf_hash(ids[4]), 3, 10, path, root)
    assert not verify_inclusion(leaf_hash(ids[3]), 4, 10, path, root)
    # a 4-entry path cannot fit an 8-leaf tree (depth 3)
    assert not verify_inclusion(leaf_hash(ids[3]), 3, 8, path, root)
    assert not verify_inclusion(leaf_hash(ids[3]), 3, 10, path, sha(b"x"))
    assert not verify_inclusion(leaf_hash(ids[3]), 3, 10, path[:-1], root)
    assert not verify_inclusion(leaf_hash(ids[3]), 12, 10, path, root)


# ------------------------------------------------------------ local store


def entity_payload():
    return create_entity().public_payload()


def attestation_record():
    issuer, subject = create_entity(), create_entity()
    att, record = issue_attestation(
        issuer, subject.public_key, "wave://s/nrf/nnrf-nfm", {"GET"},
        NOW - HOUR, NOW + HOUR,
    )
    return att, record, issuer


def test_put_get_round_trip(tmp_path):
    store = ObjectStore(tmp_path)
    payload = entity_payload()
    object_id, seq, dedup = store.put(protocol.KIND_ENTITY, payload)
    assert object_id == sha(payload)
    assert seq == 0 and not dedup
    obj = store.get(object_id)
    assert obj.payload == payload and obj.kind == protocol.KIND_ENTITY
    store.close()


def test_duplicate_payload_deduplicates(tmp_path):
    store = ObjectStore(tmp_path)
    payload = entity_payload()
    id1, seq1, dedup1 = store.put(protocol.KIND_ENTITY, payload)
    size_before = store.log_root()["size"]
    id2, seq2, dedup2 = store.put(protocol.KIND_ENTITY, payload)
    assert (id1, seq1) == (id2, seq2)
    assert not dedup1 and dedup2
    assert store.log_root()["size"] == size_before
    store.close()


def test_rejects_oversize_empty_and_unknown(tmp_path):
    store = ObjectStore(tmp_path)
    with pytest.raises(StoreError) as e:
        store.put(protocol.KIND_ENTITY, b"\x00" * (protocol.MAX_OBJECT_BYTES + 1))
    assert e.value.code == "object-too-large"
    with pytest.raises(StoreError):
        store.put(protocol.KIND_ENTITY, b"")
    with pytest.raises(StoreError) as e:
        store.put("mystery", b"abc")
    assert e.value.code == "unknown-kind"
    with pytest.raises(StoreError) as e:
        store.put(protocol.KIND_REVOCATION, b"garbage")
    assert e.value.code == "malformed-object"
    store.close()


def test_persistence_across_reopen(tmp_path):
    store = ObjectStore(tmp_path)
    ids = []
    for _ in range(5):
        object_id, _, _ = store.put(protocol.KIND_ENTITY, entity_payload())
        ids.append(object_id)
    root = store.log_root()
    store.close()

    reopened = ObjectStore(tmp_path)
    assert reopened.log_root() == root
    for object_id in ids:
        assert reopened.get(object_id).object_id == object_id
    # appends continue after the preexisting tail
    new_id, seq, _ = reopened.put(protocol.KIND_ENTITY, entity_payload())
    assert seq == 5
    reopened.close()


def test_on_disk_tampering_detected(tmp_path):
    store = ObjectStore(tmp_path)
    a, _, _ = store.put(protocol.KIND_ENTITY, entity_payload())
    b, _, _ = store.put(protocol.KIND_ENTITY, entity_payload())

    path = tmp_path / "objects.jsonl"
    lines = path.read_bytes().splitlines(keepends=True)
    row = json.loads(lines[1])
    payload = bytearray(bytes.fromhex(row["payload"]))
    payload[0] ^= 0xFF
    row["payload"] = bytes(payload).hex()
    lines[1] = json.dumps(row).encode() + b"\n"
    path.write_bytes(b"".join(lines))

    assert store.get(a).object_id == a  # untouched row still reads
    with pytest.raises(StoreError) as e:
        store.get(b)
    assert e.value.code == "corrupt-object"
    store.close()

    with pytest.raises(StoreError):
        ObjectStore(tmp_path)  # reload refuses the tampered file outright


def test_revocation_index(tmp_path):
    store = ObjectStore(tmp_path)
    att, record, issuer = attestation_record()
    store.put(protocol.KIND_ATTESTATION, record)
    assert store.revocations_for(att.hash) == []
    _, rev_record = revoke(issuer, att)
    store.put(protocol.KIND_REVOCATION, rev_record)
    found = store.revocations_for(att.hash)
    assert len(found) == 1
    decoded = encoding.decode_revocation_record(found[0].payload)
    assert decoded["attestation_hash"] == att.hash
    store.close()


def test_subject_index_lists_sealed_attestations(tmp_path):
    store = ObjectStore(tmp_path)
    att, record, _ = attestation_record()
    store.put(protocol.KIND_ATTESTATION, record)
    store.put(protocol.KIND_ENTITY, entity_payload())
    decoded = encoding.decode_attestation_record(record)
    got = store.list(subject=decoded["subject_hash"])
    assert [o.payload for o in got] == [record]
    assert store.list(kind=protocol.KIND_ATTESTATION, subject=sha(b"nobody")) == []
    store.close()


# ------------------------------------------------------------ HTTP server


@pytest.fixture()
def server(tmp_path):
    srv = StoreServer(ObjectStore(tmp_path), "127.0.0.1", 0)
    wait_for_health("127.0.0.1", srv.port)
    yield srv
    srv.stop()


def test_http_round_trip_and_inclusion(server):
    client = StoreClient([("127.0.0.1", server.port)])
    payload = entity_payload()
    put = client.put_object(protocol.KIND_ENTITY, payload)
    object_id = bytes.fromhex(put["id"])
    assert object_id == sha(payload)

    assert client.get_payload(object_id) == payload
    proof = client.inclusion(object_id)
    assert verify_inclusion(
        leaf_hash(object_id),
        proof["leaf_index"],
        proof["tree_size"],
        [bytes.fromhex(p) for p in proof["path"]],
        bytes.fromhex(proof["root"]),
    )
    assert client.log_root()["root"] == proof["root"]


def test_http_errors(server):
    client = StoreClient([("127.0.0.1", server.port)])
    with pytest.raises(StoreClientError) as e:
        client.get_object(sha(b"missing"))
    assert e.value.code == "not-found"
    with pytest.raises(StoreClientError) as e:
        client.put_object("mystery", b"abc")
    assert e.value.code == "unknown-kind"
    with pytest.raises(StoreClientError) as e:
        client.put_object(protocol.KIND_ENTITY, b"\x00" * (64 * 1024 + 1))
    assert e.value.code == "object-too-large"


def test_http_list_pagination(server):
    client = StoreClient([("127.0.0.1", server.port)])
    ids = []
    for _ in range(5):
        ids.append(client.put_object(protocol.KIND_ENTITY, entity_payload())["id"])
    page = client.list_objects(kind=protocol.KIND_ENTITY, after_seq=1, limit=2)
    assert [o["seq"] for o in page] == [2, 3]
    assert [o["id"] for o in page] == ids[2:4]


def test_client_failover_and_replication(tmp_path):
    srv_a = StoreServer(ObjectStore(tmp_path / "a"), "127.0.0.1", 0)
    srv_b = StoreServer(ObjectStore(tmp_path / "b"), "127.0.0.1", 0)
    try:
        wait_for_health("127.0.0.1", srv_a.port)
        wait_for_health("127.0.0.1", srv_b.port)
        client = StoreClient([("127.0.0.1", srv_a.port), ("127.0.0.1", srv_b.port)])
        payload = entity_payload()
        put = client.put_object(protocol.KIND_ENTITY, payload)
        object_id = bytes.fromhex(put["id"])
        # replicated: both logs advanced to the identical root
        assert srv_a.store.log_root() == srv_b.store.log_root()

        srv_a.stop()
        client.http.close()  # drop pooled connections to the dead server
        assert client.get_payload(object_id) == payload  # served by b
        second = entity_payload()
        client.put_object(protocol.KIND_ENTITY, second)  # b alone accepts
        assert srv_b.store.log_root()["size"] == 2
    finally:
        srv_b.stop()


def test_client_reports_total_outage(tmp_path):
    srv = StoreServer(ObjectStore(tmp_path), "127.0.0.1", 0)
    port = srv.port
    srv.stop()
    client = StoreClient([("127.0.0.1", port)])
    with pytest.raises((StoreClientError,)) as e:
        client.log_root()
    assert e.value.code == "unreachable"
    with pytest.raises(StoreClientError) as e:
        client.put_object(protocol.KIND_ENTITY, entity_payload())
    assert e.value.code == "put-failed"
