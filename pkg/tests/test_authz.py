"""Delegation graph core: entities, attestations, proofs, revocation.

Proof construction is checked against a brute-force DFS oracle that
enumerates every simple path and picks the (length, hash-sequence) minimum
independently of the BFS implementation.
"""

import json
import random
import subprocess
import sys
import time

import pytest

from wavecore import crypto, protocol
from wavecore.authz import (
    Attestation,
    PerspectiveGraph,
    Proof,
    build_proof,
    create_entity,
    issue_attestation,
    revoke,
    unseal_attestation,
    verify_proof,
)
from wavecore.authz.attestation import AttestationError, revocation_is_valid
from wavecore.authz.graph import ProofDecodeError, proof_from_wire
from sha256_oracle import sha256_oracle

NOW = int(time.time() * 1_000_000)
HOUR = 3600 * 1_000_000
RES = "wave://slice1/nrf/nnrf-nfm"
ALT_RES = "wave://slice1/udr/nudr-dr"


@pytest.fixture(scope="module")
def pool():
    return [create_entity() for _ in range(8)]


def make_att(issuer, subject, resource=RES, perms=("GET", "PUT"), nb=None, na=None):
    att, _ = issue_attestation(
        issuer,
        subject.public_key,
        resource,
        perms,
        NOW - HOUR if nb is None else nb,
        NOW + HOUR if na is None else na,
    )
    return att


# ---------------------------------------------------------------- entities


def test_entity_keypair_self_consistency():
    e = create_entity()
    sig = crypto.sign(e.private_key, b"any message")
    assert crypto.verify_signature(e.public_key, sig, b"any message")
    assert not crypto.verify_signature(e.public_key, sig, b"other message")


def test_entity_hashes_are_fresh():
    assert create_entity().hash != create_entity().hash


def test_entity_hash_recomputable_by_independent_digest():
    e = create_entity()
    assert sha256_oracle(e.public_payload()) == e.hash


# ------------------------------------------------------------ attestations


def test_attestation_signature_verifies_under_issuer_key(pool):
    nrf, amf = pool[0], pool[1]
    att = make_att(nrf, amf, perms={"PUT", "PATCH", "POST"})
    assert crypto.verify_signature(nrf.public_key, att.signature, att.body_bytes())
    assert att.hash == crypto.digest(att.body_bytes())
    assert sha256_oracle(att.body_bytes()) == att.hash


def test_empty_permissions_rejected(pool):
    with pytest.raises(AttestationError):
        issue_attestation(pool[0], pool[1].public_key, RES, set(), NOW, NOW + HOUR)


def test_inverted_validity_rejected(pool):
    with pytest.raises(AttestationError):
        issue_attestation(pool[0], pool[1].public_key, RES, {"GET"}, NOW + HOUR, NOW)


def test_seal_round_trip_and_third_key_failure(pool):
    issuer, subject, other = pool[0], pool[1], pool[2]
    att, record = issue_attestation(
        issuer, subject.public_key, RES, {"GET"}, NOW - HOUR, NOW + HOUR
    )
    got = unseal_attestation(subject, record, issuer.public_key)
    assert got is not None
    assert got.body_bytes() == att.body_bytes()
    assert got.hash == att.hash
    # a third, unrelated keypair cannot read the sealed body
    assert unseal_attestation(other, record, issuer.public_key) is None


# -------------------------------------------------------------- build_proof


def test_direct_edge_yields_path_length_one(pool):
    nrf, amf = pool[0], pool[1]
    g = PerspectiveGraph(owner_hash=amf.hash)
    g.add(make_att(nrf, amf))
    proof = build_proof(g, amf.hash, nrf.hash, RES, {"GET"}, NOW)
    assert proof is not None
    assert len(proof.path) == 1
    assert proof.path[0].issuer_hash == nrf.hash
    assert proof.path[0].subject_hash == amf.hash


def test_self_proof_is_empty_path_full_permissions(pool):
    g = PerspectiveGraph(owner_hash=pool[0].hash)
    proof = build_proof(g, pool[0].hash, pool[0].hash, RES, {"GET"}, NOW)
    assert proof.path == ()
    assert proof.granted_permissions == protocol.ALL_METHODS


def test_permission_narrowing_along_chain(pool):
    a, b, c = pool[0], pool[1], pool[2]
    g = PerspectiveGraph(owner_hash=c.hash)
    ab = make_att(a, b, perms={"GET", "PUT", "POST"})
    bc = make_att(b, c, perms={"GET", "POST", "PATCH"})
    g.add(ab)
    g.add(bc)
    proof = build_proof(g, c.hash, a.hash, RES, {"GET"}, NOW)
    assert proof.granted_permissions == {"GET", "POST"}
    assert proof.granted_permissions <= ab.permissions
    assert proof.granted_permissions <= bc.permissions


# ------------------------------------------------- oracle: brute-force DFS


def usable(att, resource, needed, now, revoked):
    return (
        att.hash not in revoked
        and att.valid_at(now)
        and att.resource == resource
        and needed <= att.permissions
    )


def oracle_best_path(atts, requester, authorizer, resource, needed, now, revoked, max_len=8):
    """Minimum (length, hash-tuple) simple path, by exhaustive enumeration."""
    edges = [a for a in atts if usable(a, resource, needed, now, revoked)]
    by_issuer = {}
    for a in edges:
        by_issuer.setdefault(a.issuer_hash, []).append(a)
    best = None

    def dfs(node, path, visited):
        nonlocal best
        if len(path) >= max_len:
            return
        for att in by_issuer.get(node, []):
            if att.subject_hash == requester:
                cand = tuple(p.hash for p in path) + (att.hash,)
                key = (len(cand), cand)
                if best is None or key < best[0]:
                    best = (key, path + [att])
                continue
            if att.subject_hash in visited:
                continue
            dfs(att.subject_hash, path + [att], visited | {att.subject_hash})

    dfs(authorizer, [], {authorizer})
    return None if best is None else best[1]


def random_case(rng, pool):
    entities = rng.sample(pool, rng.randint(2, 8))
    n_edges = rng.randint(0, 16)
    methods = sorted(protocol.ALL_METHODS)
    atts, revoked = [], set()
    for _ in range(n_edges):
        issuer = rng.choice(entities)
        subject = rng.choice(entities)
        resource = RES if rng.random() > 0.15 else ALT_RES
        perms = rng.sample(methods, rng.randint(1, 5))
        r = rng.random()
        if r < 0.8:
            nb, na = NOW - HOUR, NOW + HOUR
        elif r < 0.9:
            nb, na = NOW - 2 * HOUR, NOW - HOUR  # expired
        else:
            nb, na = NOW + HOUR, NOW + 2 * HOUR  # not yet valid
        att = make_att(issuer, subject, resource, perms, nb, na)
        if rng.random() < 0.1:
            revoked.add(att.hash)
        atts.append(att)
    by_hash = {e.hash: e for e in entities}
    issuers = [by_hash[a.issuer_hash] for a in atts]
    subjects = [by_hash[a.subject_hash] for a in atts]
    if atts and rng.random() < 0.7:
        # bias endpoints toward the populated part of the graph so a healthy
        # share of trials exercises real chains
        authorizer = rng.choice(issuers)
        requester = rng.choice(subjects)
    else:
        requester = rng.choice(entities)
        authorizer = rng.choice(entities)
    if rng.random() < 0.1:
        authorizer = requester
    needed = frozenset(rng.sample(methods, rng.randint(1, 2)))
    return atts, revoked, requester, authorizer, needed


def check_against_oracle(atts, revoked, requester, authorizer, needed):
    g = PerspectiveGraph(owner_hash=requester.hash)
    for a in atts:
        g.add(a)
    for h in revoked:
        g.mark_revoked(h)
    proof = build_proof(g, requester.hash, authorizer.hash, RES, needed, NOW)
    if requester.hash == authorizer.hash:
        assert proof is not None and proof.path == ()
        return proof
    best = oracle_best_path(atts, requester.hash, authorizer.hash, RES, needed, NOW, revoked)
    if best is None:
        assert proof is None, "build_proof found a path the oracle says cannot exist"
        return None
    assert proof is not None, "oracle found a path build_proof missed"
    assert [a.hash for a in proof.path] == [a.hash for a in best]
    expected = frozenset(protocol.ALL_METHODS)
    for a in proof.path:
        expected &= a.permissions
    assert proof.granted_permissions == expected
    return proof


def test_build_proof_matches_dfs_oracle(pool):
    rng = random.Random(2024)
    found = 0
    for _ in range(300):
        atts, revoked, requester, authorizer, needed = random_case(rng, pool)
        proof = check_against_oracle(atts, revoked, requester, authorizer, needed)
        if proof is not None and proof.path:
            found += 1
            result = verify_proof(
                proof, requester.hash, authorizer.hash, RES, needed, NOW
            )
            assert result.ok, f"round-trip verify failed: {result.reason}"
    assert found > 30  # the generator must exercise real chains


# ------------------------------------------------------------ verify_proof


def two_hop_proof(pool):
    a, b, c = pool[0], pool[1], pool[2]
    g = PerspectiveGraph(owner_hash=c.hash)
    g.add(make_att(a, b))
    g.add(make_att(b, c))
    proof = build_proof(g, c.hash, a.hash, RES, {"GET"}, NOW)
    assert proof is not None and len(proof.path) == 2
    return proof, a, c


def test_verify_accepts_round_trip(pool):
    proof, a, c = two_hop_proof(pool)
    assert verify_proof(proof, c.hash, a.hash, RES, {"GET"}, NOW).ok


def test_flipped_signature_byte_rejected(pool):
    proof, a, c = two_hop_proof(pool)
    wire = proof.to_wire()
    sig = bytearray(bytes.fromhex(wire["path"][1]["signature"]))
    sig[len(sig) // 2] ^= 0x01
    wire["path"][1]["signature"] = sig.hex()
    result = verify_proof(proof_from_wire(wire), c.hash, a.hash, RES, {"GET"}, NOW)
    assert not result.ok and result.reason == "bad-signature"


def test_revoked_attestation_rejected(pool):
    proof, a, c = two_hop_proof(pool)
    rev, _ = revoke(a, proof.path[0])
    lookup = lambda att: [rev] if att.hash == proof.path[0].hash else []
    result = verify_proof(proof, c.hash, a.hash, RES, {"GET"}, NOW, revocation_check=lookup)
    assert not result.ok and result.reason == "revoked"


def test_forged_revocation_does_not_reject(pool):
    proof, a, c = two_hop_proof(pool)
    forger = pool[3]
    fake_att = proof.path[0]
    sig = crypto.sign(forger.private_key, b"\xb0" + fake_att.hash)
    from wavecore.authz.attestation import Revocation

    fake = Revocation(fake_att.hash, fake_att.issuer_hash, NOW, sig)
    assert not revocation_is_valid(fake, fake_att)
    result = verify_proof(
        proof, c.hash, a.hash, RES, {"GET"}, NOW, revocation_check=lambda att: [fake]
    )
    assert result.ok


def test_endpoint_mismatch_takes_precedence(pool):
    proof, a, c = two_hop_proof(pool)
    wire = proof.to_wire()
    sig = bytearray(bytes.fromhex(wire["path"][0]["signature"]))
    sig[0] ^= 0xFF
    wire["path"][0]["signature"] = sig.hex()
    other = pool[4]
    result = verify_proof(proof_from_wire(wire), other.hash, a.hash, RES, {"GET"}, NOW)
    assert result.reason == "endpoint-mismatch"


def test_broken_chain_reported_after_signatures(pool):
    proof, a, c = two_hop_proof(pool)
    wire = proof.to_wire()
    wire["path"] = [wire["path"][1], wire["path"][0]]
    result = verify_proof(proof_from_wire(wire), c.hash, a.hash, RES, {"GET"}, NOW)
    assert result.reason == "endpoint-mismatch"  # reversed ends no longer match
    # splice in a properly signed edge from an unrelated issuer: both chain
    # ends still match and every signature verifies, but the interior link
    # b->? no longer connects
    d = pool[3]
    g = PerspectiveGraph(owner_hash=c.hash)
    g.add(make_att(d, c))
    splice = build_proof(g, c.hash, d.hash, RES, {"GET"}, NOW)
    wire = proof.to_wire()
    wire["path"][1] = splice.to_wire()["path"][0]
    result = verify_proof(proof_from_wire(wire), c.hash, a.hash, RES, {"GET"}, NOW)
    assert result.reason == "chain-broken"


def test_expired_attestation_rejected(pool):
    a, b = pool[0], pool[1]
    g = PerspectiveGraph(owner_hash=b.hash)
    att = make_att(a, b, nb=NOW - 2 * HOUR, na=NOW - HOUR)
    g.add(att)
    proof = build_proof(g, b.hash, a.hash, RES, {"GET"}, NOW - 90 * 60 * 1_000_000)
    assert proof is not None
    result = verify_proof(proof, b.hash, a.hash, RES, {"GET"}, NOW)
    assert result.reason == "outside-validity"


def test_insufficient_permissions_rejected(pool):
    proof, a, c = two_hop_proof(pool)
    result = verify_proof(proof, c.hash, a.hash, RES, {"DELETE"}, NOW)
    assert result.reason == "insufficient-permissions"
    result = verify_proof(proof, c.hash, a.hash, RES, set(), NOW)
    assert not result.ok


def test_inflated_granted_permissions_rejected(pool):
    proof, a, c = two_hop_proof(pool)
    wire = proof.to_wire()
    wire["granted_permissions"] = sorted(protocol.ALL_METHODS)
    result = verify_proof(proof_from_wire(wire), c.hash, a.hash, RES, {"DELETE"}, NOW)
    assert result.reason == "insufficient-permissions"


def test_resource_mismatch_rejected(pool):
    proof, a, c = two_hop_proof(pool)
    shifted = Proof(
        requester_hash=proof.requester_hash,
        authorizer_hash=proof.authorizer_hash,
        resource=ALT_RES,
        granted_permissions=proof.granted_permissions,
        path=proof.path,
    )
    result = verify_proof(shifted, c.hash, a.hash, ALT_RES, {"GET"}, NOW)
    assert result.reason == "resource-mismatch"


def test_self_proof_verifies(pool):
    e = pool[5]
    proof = Proof(e.hash, e.hash, RES, frozenset(protocol.ALL_METHODS), ())
    assert verify_proof(proof, e.hash, e.hash, RES, {"DELETE"}, NOW).ok
    other = pool[6]
    assert not verify_proof(proof, other.hash, e.hash, RES, {"GET"}, NOW).ok


def test_malformed_wire_raises_decode_error():
    for bad in [None, 17, {}, {"requester_hash": "zz"}, {"requester_hash": "00" * 32}]:
        with pytest.raises(ProofDecodeError):
            proof_from_wire(bad)


MUTATORS = {
    "requester_hash": lambda w: w.update(requester_hash=_fliphex(w["requester_hash"])),
    "authorizer_hash": lambda w: w.update(authorizer_hash=_fliphex(w["authorizer_hash"])),
    "resource": lambda w: w.update(resource=w["resource"] + "x"),
    "granted_permissions": lambda w: w.update(
        granted_permissions=sorted(set(w["granted_permissions"]) ^ {"DELETE"})
    ),
}

ATT_MUTATORS = {
    "issuer_hash": lambda el: el.update(issuer_hash=_fliphex(el["issuer_hash"])),
    "subject_hash": lambda el: el.update(subject_hash=_fliphex(el["subject_hash"])),
    "resource": lambda el: el.update(resource=el["resource"] + "x"),
    "permissions": lambda el: el.update(
        permissions=sorted(set(el["permissions"]) ^ {"DELETE"})
    ),
    "not_before_us": lambda el: el.update(not_before_us=el["not_before_us"] + 1),
    "not_after_us": lambda el: el.update(not_after_us=el["not_after_us"] - 1),
    "signature": lambda el: el.update(signature=_fliphex(el["signature"])),
    "issuer_public_key": lambda el: el.update(
        issuer_public_key=_fliphex(el["issuer_public_key"])
    ),
}


def _fliphex(h):
    raw = bytearray(bytes.fromhex(h))
    raw[len(raw) // 2] ^= 0x01
    return raw.hex()


def mutation_outcomes(proof, requester, authorizer, needed=frozenset({"GET"})):
    """Yield (field-name, VerifyResult-or-'decode-error') for every mutation."""
    base = proof.to_wire()
    for name, mutate in MUTATORS.items():
        wire = json.loads(json.dumps(base))
        mutate(wire)
        try:
            yield name, verify_proof(
                proof_from_wire(wire), requester, authorizer, RES, needed, NOW
            )
        except ProofDecodeError:
            yield name, "decode-error"
    for idx in range(len(base["path"])):
        for name, mutate in ATT_MUTATORS.items():
            wire = json.loads(json.dumps(base))
            mutate(wire["path"][idx])
            try:
                yield f"path[{idx}].{name}", verify_proof(
                    proof_from_wire(wire), requester, authorizer, RES, needed, NOW
                )
            except ProofDecodeError:
                yield f"path[{idx}].{name}", "decode-error"


def test_every_single_field_mutation_rejected(pool):
    proof, a, c = two_hop_proof(pool)
    count = 0
    for field, outcome in mutation_outcomes(proof, c.hash, a.hash):
        count += 1
        if outcome == "decode-error":
            continue
        assert not outcome.ok, f"mutation of {field} was accepted"
    assert count == len(MUTATORS) + 2 * len(ATT_MUTATORS)


# --------------------------------------------------------------- revocation


def test_only_issuer_can_revoke(pool):
    a, b = pool[0], pool[1]
    att = make_att(a, b)
    with pytest.raises(AttestationError):
        revoke(b, att)
    rev, record = revoke(a, att)
    assert revocation_is_valid(rev, att)
    assert len(record) > 0


def test_revocation_idempotent(pool):
    a, b = pool[0], pool[1]
    att = make_att(a, b)
    rev1, _ = revoke(a, att, clock=lambda: 1000.0)
    rev2, _ = revoke(a, att, clock=lambda: 2000.0)
    assert revocation_is_valid(rev1, att)
    assert revocation_is_valid(rev2, att)


def test_revocation_monotonicity(pool):
    proof, a, c = two_hop_proof(pool)
    rev0, _ = revoke(a, proof.path[0])
    revs = [rev0]

    def lookup(att):
        return [r for r in revs if r.attestation_hash == att.hash]

    assert verify_proof(proof, c.hash, a.hash, RES, {"GET"}, NOW, lookup).reason == "revoked"
    # growing the revocation set can never flip the result back to Accept
    for other in (proof.path[1], proof.path[0]):
        extra, _ = revoke(
            pool[0] if other.issuer_hash == pool[0].hash else pool[1], other
        )
        revs.append(extra)
        assert (
            verify_proof(proof, c.hash, a.hash, RES, {"GET"}, NOW, lookup).reason
            == "revoked"
        )


# ------------------------------------------------- pure-function isolation


VERIFY_SCRIPT = """
import json, sys
from wavecore.authz.graph import proof_from_wire
from wavecore.authz.verify import verify_proof
req = json.load(sys.stdin)
result = verify_proof(
    proof_from_wire(req["proof"]),
    bytes.fromhex(req["expected_requester"]),
    bytes.fromhex(req["expected_authorizer"]),
    req["resource"],
    frozenset(req["needed"]),
    req["now_us"],
)
print(json.dumps({"ok": result.ok, "reason": result.reason}))
"""


def test_verify_runs_in_process_without_private_keys(pool):
    proof, a, c = two_hop_proof(pool)
    payload = json.dumps(
        {
            "proof": proof.to_wire(),
            "expected_requester": c.hash.hex(),
            "expected_authorizer": a.hash.hex(),
            "resource": RES,
            "needed": ["GET"],
            "now_us": NOW,
        }
    )
    out = subprocess.run(
        [sys.executable, "-c", VERIFY_SCRIPT],
        input=payload,
        capture_output=True,
        text=True,
        timeout=60,
    )
    assert out.returncode == 0, out.stderr
    assert json.loads(out.stdout) == {"ok": True, "reason": None}
