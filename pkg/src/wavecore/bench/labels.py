"""Canonical labels for the authorized service calls of a full UE attach.

A complete attach on one slice exercises exactly fourteen distinct
authorized requests: three while the access and session functions register
with the registry, eight along the 5G-AKA authentication chain, and three
during PDU session setup.  Each row here carries the timing measured on the
platform's reference hardware; reports print those numbers next to locally
measured values for comparison, but nothing ever gates on them — absolute
milliseconds are hardware-bound.

``classify`` maps an interception record back to its row from the provider
type, the HTTP method, and the path shape.  The one ambiguous case — both
the access and the session function register via the same PUT — splits on
the requester type (or, when the requester is unknown, on the instance id
embedded in the path).
"""

from __future__ import annotations

from dataclasses import dataclass

GROUP_REGISTRATION = "registration"
GROUP_AKA = "aka"
GROUP_PDU = "pdu"
GROUPS = (GROUP_REGISTRATION, GROUP_AKA, GROUP_PDU)


@dataclass(frozen=True)
class RequestRow:
    row: int
    requester: str          # vnf type issuing the call
    provider: str           # vnf type answering it
    group: str
    method: str
    path_mark: str          # substring that identifies the path
    path_veto: str          # substring that must NOT appear ("" = none)
    label: str
    reference_ms: float


REQUEST_ROWS = (
    RequestRow(1, "amf", "nrf", GROUP_REGISTRATION, "PUT",
               "/nnrf-nfm/v1/nf-instances/", "",
               "PUT: nnrf-nfm (NF registration)", 114.55),
    RequestRow(2, "smf", "nrf", GROUP_REGISTRATION, "POST",
               "/nnrf-nfm/v1/subscriptions", "",
               "POST: nnrf-nfm (Subscribe to updates)", 115.65),
    RequestRow(3, "smf", "nrf", GROUP_REGISTRATION, "PUT",
               "/nnrf-nfm/v1/nf-instances/", "",
               "PUT: nnrf-nfm (NF registration)", 110.75),
    RequestRow(4, "amf", "ausf", GROUP_AKA, "POST",
               "/nausf-auth/v1/ue-authentications", "",
               "POST: nausf-auth (UE authentication)", 138.80),
    RequestRow(5, "ausf", "udm", GROUP_AKA, "POST",
               "/generate-auth-data", "",
               "POST: nudm-ueau (Generate authentication vectors)", 227.95),
    RequestRow(6, "udm", "udr", GROUP_AKA, "GET",
               "/authentication-subscription", "",
               "GET: nudr-dr (Query UE authentication data)", 212.65),
    RequestRow(7, "udm", "udr", GROUP_AKA, "PATCH",
               "/authentication-subscription", "",
               "PATCH: nudr-dr (Update UE authentication data)", 120.25),
    RequestRow(8, "amf", "ausf", GROUP_AKA, "PUT",
               "/5g-aka-confirmation", "",
               "PUT: nausf-auth (Authentication confirmation)", 99.90),
    RequestRow(9, "ausf", "udm", GROUP_AKA, "POST",
               "/auth-events", "",
               "POST: nudm-ueau (Inform about authentication result)", 132.30),
    RequestRow(10, "udm", "udr", GROUP_AKA, "GET",
                "/authentication-status", "",
                "GET: nudr-dr (Query UE authentication data)", 129.05),
    RequestRow(11, "udm", "udr", GROUP_AKA, "PUT",
                "/authentication-status", "",
                "PUT: nudr-dr (Update UE authentication data)", 131.60),
    RequestRow(12, "amf", "smf", GROUP_PDU, "POST",
                "/nsmf-pdusession/v1/sm-contexts", "/modify",
                "POST: nsmf-pdusession (Create SM Context)", 252.00),
    RequestRow(13, "smf", "amf", GROUP_PDU, "POST",
                "/n1n2-messages", "",
                "POST: namf-comm (N1-N2 message transfer)", 194.10),
    RequestRow(14, "amf", "smf", GROUP_PDU, "POST",
                "/modify", "",
                "POST: nsmf-pdusession (Update SM Context)", 135.55),
)

# Mean of the fourteen reference rows, printed by reports for comparison.
REFERENCE_MEAN_MS = 151.08

# Verification-count ledger: how many authorization checks each flow group
# performs end to end, and how many fall inside the access-function's
# authentication request to the auth server (its window nests the whole
# vector-generation sub-chain: itself + rows 5-7).
VERIFY_LEDGER = {GROUP_REGISTRATION: 3, GROUP_AKA: 8, GROUP_PDU: 3}
NESTED_AUTH_VERIFY_COUNT = 4


@dataclass(frozen=True)
class AttestationPairRow:
    requester: str
    authorizer: str
    reference_mean_ms: float
    reference_std_ms: float


ATTESTATION_PAIR_ROWS = (
    AttestationPairRow("amf", "nrf", 156.52, 12.35),
    AttestationPairRow("smf", "nrf", 133.16, 17.54),
    AttestationPairRow("udm", "udr", 159.40, 28.64),
    AttestationPairRow("ausf", "udm", 197.80, 21.72),
    AttestationPairRow("amf", "ausf", 184.90, 18.26),
    AttestationPairRow("smf", "amf", 195.90, 21.98),
    AttestationPairRow("amf", "smf", 183.94, 15.94),
)


def rows_for_group(group: str) -> tuple[RequestRow, ...]:
    return tuple(r for r in REQUEST_ROWS if r.group == group)


def _instance_type(path: str) -> str | None:
    """Vnf type from a registry instance path (ids are 'domain-type')."""
    tail = path.rstrip("/").rsplit("/", 1)[-1]
    suffix = tail.rsplit("-", 1)[-1]
    return suffix if suffix in ("amf", "smf") else None


def classify(provider_type: str, method: str, path: str,
             requester_type: str | None = None) -> RequestRow | None:
    """The canonical row for one intercepted request, or None.

    Registry heartbeats, driver traffic, and anything else outside the
    fourteen-row surface map to None.
    """
    for row in REQUEST_ROWS:
        if row.provider != provider_type or row.method != method:
            continue
        if row.path_mark not in path:
            continue
        if row.path_veto and row.path_veto in path:
            continue
        if row.provider == "nrf" and row.method == "PUT":
            requester = requester_type or _instance_type(path)
            if requester != row.requester:
                continue
        return row
    return None
