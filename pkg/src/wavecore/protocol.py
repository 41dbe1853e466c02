"""Protocol constants shared by every component.

Values here are part of the wire contract documented in PROTOCOL.md.
"""

VERSION = 1

# record tags
TAG_ATTESTATION_BODY = 0xA1
TAG_ATTESTATION_RECORD = 0xA2
TAG_REVOCATION_SIGN = 0xB0
TAG_REVOCATION_RECORD = 0xB1
TAG_REQUEST_SIG = 0xC1

HASH_LEN = 32
PUBKEY_LEN = 33  # SEC1 compressed P-256 point

# store object kinds
KIND_ENTITY = "entity-public"
KIND_ATTESTATION = "attestation"
KIND_REVOCATION = "revocation"
KINDS = (KIND_ENTITY, KIND_ATTESTATION, KIND_REVOCATION)

MAX_OBJECT_BYTES = 64 * 1024
MAX_PROOF_PATH = 8
MAX_PROXY_BODY = 4 * 1024 * 1024

ALL_METHODS = frozenset({"GET", "POST", "PUT", "PATCH", "DELETE"})

# methods granted to an approved requester-provider pair by default
DEFAULT_PAIR_PERMISSIONS = frozenset({"GET", "POST", "PUT", "PATCH"})

RESOURCE_SCHEME = "wave"

# canonical API-family label per provider VNF type; one attestation under
# this label covers the provider's whole API set
API_FAMILY = {
    "nrf": "nnrf-nfm",
    "udr": "nudr-dr",
    "udm": "nudm-ueau",
    "ausf": "nausf-auth",
    "amf": "namf-comm",
    "smf": "nsmf-pdusession",
    "upf": "n4-session",
}

ATTESTATION_TTL_S = 24 * 3600

SIGNED_REQUEST_HEADER = "X-Request-Signature"
SIGNED_REQUEST_WINDOW_S = 60
POD_GATE_HEADER = "X-Pod-Gate"

INTERCEPT_RING_SIZE = 65536


def resource_uri(slice_domain: str, vnf_type: str) -> str:
    """Canonical resource URI for a provider's API set within a slice."""
    return f"{RESOURCE_SCHEME}://{slice_domain}/{vnf_type}/{API_FAMILY[vnf_type]}"
