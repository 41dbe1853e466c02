"""Latency scenarios: registration, authentication chain, session setup.

Each scenario drives its flow N times against a live deployment, pulls the
interception records the flow produced, maps every record onto its
canonical row, and aggregates per-row timing splits:

* ``total_ms``  — proxy residence time of the request,
* ``verify_ms`` — authorization duration reported by the grant/verify agent,
* ``base_ms``   — total minus the proxy-observed authorization window.

``verify_count`` for a row is the number of authorization checks that ran
inside that request's time window — the request's own check plus every
check belonging to the nested calls it triggered (wall-clock containment;
all records carry microsecond wall timestamps).  The access function's
authentication POST therefore reports 4: itself, vector generation, and
the two subscription-data calls underneath it.
"""

from __future__ import annotations

import statistics
import time

from ..vnf import UeSim, UeSimError
from . import labels
from .reports import LatencyReport, LatencyRow

DEFAULT_ITERATIONS = 20


class ScenarioError(RuntimeError):
    """A scenario request failed; carries the failing step for diagnosis."""


# ------------------------------------------------------- record plumbing

def pod_labels(deployment) -> list:
    return sorted(deployment.describe()["pods"])


def snapshot_cursors(deployment, pods=None) -> dict:
    """Current record sequence per pod; records at or past it are new."""
    pods = pod_labels(deployment) if pods is None else pods
    return {label: deployment.record_cursor(label) for label in pods}


def collect_records(deployment, cursors: dict) -> list:
    """All interception records produced since the cursor snapshot."""
    records = []
    for label, since in cursors.items():
        recs, _ = deployment.intercept_records(label, since_seq=since)
        provider_type = deployment.pod_info(label)["vnf_type"]
        for r in recs:
            r["provider_label"] = label
            r["provider_type"] = provider_type
        records.extend(recs)
    records.sort(key=lambda r: (r["started_us"], r["pod"], r["seq"]))
    return records


def _requester_type(deployment, record) -> str | None:
    requester = record.get("requester_hash")
    if not requester:
        return None
    label = deployment.label_for(requester)
    try:
        return deployment.pod_info(label)["vnf_type"]
    except KeyError:
        return None


def classify_records(deployment, records: list) -> list:
    """(row, record) for every record that belongs to the canonical surface."""
    classified = []
    for record in records:
        row = labels.classify(
            record["provider_type"], record["method"], record["path"],
            requester_type=_requester_type(deployment, record),
        )
        if row is not None:
            classified.append((row, record))
    return classified


def nested_verify_count(record, records: list) -> int:
    """Authorization checks inside this record's wall-clock window."""
    return sum(
        1 for other in records
        if other["verify_ms"] > 0.0
        and other["started_us"] >= record["started_us"]
        and other["finished_us"] <= record["finished_us"]
    )


# ----------------------------------------------------------- aggregation

def _std(samples: list) -> float:
    return statistics.stdev(samples) if len(samples) > 1 else 0.0


def aggregate(scenario: str, mode: str, group_rows, samples_by_row: dict,
              flagged=()) -> LatencyReport:
    """Fold per-iteration samples into one report row per canonical row.

    ``samples_by_row`` maps row number to a list of (record, verify_count)
    pairs gathered across iterations.
    """
    rows = []
    for row_def in group_rows:
        samples = samples_by_row.get(row_def.row, [])
        if not samples:
            raise ScenarioError(
                f"{scenario}: no traffic matched row {row_def.row} "
                f"({row_def.label})"
            )
        totals = [rec["total_ms"] for rec, _ in samples]
        verifies = [rec["verify_ms"] for rec, _ in samples]
        bases = [rec["base_ms"] for rec, _ in samples]
        counts = [vc for _, vc in samples]
        rows.append(LatencyRow(
            row=row_def.row,
            requester=row_def.requester,
            provider=row_def.provider,
            request_label=row_def.label,
            iterations=len(samples),
            base_ms_mean=statistics.fmean(bases),
            base_ms_std=_std(bases),
            verify_ms_mean=statistics.fmean(verifies),
            verify_ms_std=_std(verifies),
            total_ms_mean=statistics.fmean(totals),
            total_ms_std=_std(totals),
            verify_count=statistics.mode(counts),
            reference_ms=row_def.reference_ms,
        ))
    return LatencyReport(scenario, mode, tuple(rows), tuple(flagged))


def _run_iterations(deployment, scenario: str, group: str, iterations: int,
                    drive) -> LatencyReport:
    """Drive the flow once per iteration, collecting and classifying records.

    ``drive(iteration)`` raises ScenarioError to abort, or returns a string
    to flag the iteration and keep its records out of the statistics.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    group_rows = labels.rows_for_group(group)
    pods = pod_labels(deployment)
    samples_by_row: dict = {}
    flagged = []
    for iteration in range(iterations):
        cursors = snapshot_cursors(deployment, pods)
        flag = drive(iteration)
        records = collect_records(deployment, cursors)
        if flag:
            flagged.append(f"iteration {iteration}: {flag}")
            continue
        for row_def, record in classify_records(deployment, records):
            count = nested_verify_count(record, records)
            samples_by_row.setdefault(row_def.row, []).append((record, count))
    if flagged and not samples_by_row:
        raise ScenarioError(f"{scenario}: every iteration was flagged: {flagged}")
    return aggregate(scenario, deployment.spec.mode, group_rows,
                     samples_by_row, flagged)


# -------------------------------------------------------------- scenarios

def _slice_or_first(deployment, slice_domain: str | None) -> str:
    if slice_domain:
        return slice_domain
    return deployment.spec.slices[0]


def _subscriber(deployment):
    subscribers = deployment.spec.subscribers
    if not subscribers:
        raise ScenarioError("deployment has no provisioned subscribers")
    return subscribers[0]


def _attach_ue(deployment, slice_domain: str) -> tuple:
    info = deployment.pod_info(f"{slice_domain}-amf")
    sub = _subscriber(deployment)
    ue = UeSim(info["ip"], info["driver_port"])
    ue.provision(sub.supi, bytes.fromhex(sub.key))
    return ue, sub.supi


def bench_registration(deployment, iterations: int = DEFAULT_ITERATIONS,
                       slice_domain: str | None = None) -> LatencyReport:
    """Re-drive the access and session function registrations N times."""
    domain = _slice_or_first(deployment, slice_domain)

    def drive(_):
        try:
            deployment.driver_json(f"{domain}-amf", "POST", "/driver/register-nf", {})
            deployment.driver_json(f"{domain}-smf", "POST", "/driver/register-nf", {})
        except RuntimeError as e:
            raise ScenarioError(f"registration: {e}") from e
        return None

    return _run_iterations(deployment, "registration", labels.GROUP_REGISTRATION,
                           iterations, drive)


def bench_aka(deployment, iterations: int = DEFAULT_ITERATIONS,
              slice_domain: str | None = None) -> LatencyReport:
    """Run the full authentication chain N times for one subscriber.

    An iteration whose challenge fails with a subscriber-side error (wrong
    key) is flagged and its records never reach the statistics; transport
    failures abort the scenario.
    """
    domain = _slice_or_first(deployment, slice_domain)
    ue, supi = _attach_ue(deployment, domain)
    try:
        def drive(_):
            try:
                ue.attach(supi)
            except UeSimError as e:
                if e.status == 0 or e.status >= 500:
                    raise ScenarioError(f"aka: {e}") from e
                return f"{e.code or e.status}"
            return None

        return _run_iterations(deployment, "aka", labels.GROUP_AKA,
                               iterations, drive)
    finally:
        ue.close()


def bench_pdu(deployment, iterations: int = DEFAULT_ITERATIONS,
              slice_domain: str | None = None) -> LatencyReport:
    """Set up one PDU session per iteration for a pre-authenticated UE."""
    domain = _slice_or_first(deployment, slice_domain)
    ue, supi = _attach_ue(deployment, domain)
    try:
        try:
            ue.attach(supi)
        except UeSimError as e:
            raise ScenarioError(f"pdu: pre-authentication failed: {e}") from e
        first_session = int(time.time()) % 100_000

        def drive(iteration):
            try:
                ue.pdu_session(supi, first_session + iteration)
            except UeSimError as e:
                raise ScenarioError(f"pdu: {e}") from e
            return None

        return _run_iterations(deployment, "pdu", labels.GROUP_PDU,
                               iterations, drive)
    finally:
        ue.close()


def bench_attestation_timing(deployment, iterations: int = DEFAULT_ITERATIONS,
                             slice_domain: str | None = None):
    """Time attestation issuance for every authorized pair on one slice.

    Re-granting an existing pair issues a fresh attestation and replaces
    the provider's binding, so the mesh keeps working while we measure.
    """
    from .reports import AttestationReport, AttestationRow

    domain = _slice_or_first(deployment, slice_domain)
    rows = []
    for pair in labels.ATTESTATION_PAIR_ROWS:
        requester_label = f"{domain}-{pair.requester}"
        provider_label = ("nrf" if pair.authorizer == "nrf"
                          else f"{domain}-{pair.authorizer}")
        requester = deployment.pod_info(requester_label)
        samples = []
        for _ in range(iterations):
            try:
                grant = deployment.wscp_json(
                    provider_label, "POST", "/admin/grants",
                    {
                        "requester_hash": requester["entity_hash"],
                        "label": requester_label,
                        "slice_domain": domain,
                        "source_ip": requester["ip"],
                    },
                )
            except RuntimeError as e:
                raise ScenarioError(f"attest-timing: {e}") from e
            samples.append(float(grant["attest_ms"]))
        rows.append(AttestationRow(
            requester=pair.requester,
            authorizer=pair.authorizer,
            iterations=len(samples),
            attest_ms_mean=statistics.fmean(samples),
            attest_ms_std=_std(samples),
            reference_mean_ms=pair.reference_mean_ms,
            reference_std_ms=pair.reference_std_ms,
        ))
    return AttestationReport("attest-timing", tuple(rows))
