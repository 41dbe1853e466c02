"""Report containers and serialization for the benchmark scenarios.

Every report renders two ways: a deterministic CSV (fixed column order,
shortest round-trip float formatting, ``\\n`` line ends — identical inputs
give byte-identical output) and a column-aligned text table for terminals.
Each CSV parses back into an equal report object; report-level fields are
repeated on every data row so the files stay rectangular.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

FORMATS = ("csv", "table")


@dataclass(frozen=True)
class LatencyRow:
    row: int
    requester: str
    provider: str
    request_label: str
    iterations: int
    base_ms_mean: float
    base_ms_std: float
    verify_ms_mean: float
    verify_ms_std: float
    total_ms_mean: float
    total_ms_std: float
    verify_count: int
    reference_ms: float


@dataclass(frozen=True)
class LatencyReport:
    scenario: str           # registration | aka | pdu
    mode: str               # wave | baseline
    rows: tuple             # (LatencyRow, ...)
    flagged: tuple = ()     # iterations excluded from the stats, with reason


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float


@dataclass(frozen=True)
class ScalingPoint:
    slice_count: int
    samples: int
    heartbeat_ms_mean: float
    heartbeat_ms_std: float


@dataclass(frozen=True)
class ScalingReport:
    scenario: str           # always "scaling"
    mode: str
    points: tuple           # (ScalingPoint, ...) sorted by slice_count
    linear_fit: LinearFit
    ratio_10_to_1: float    # mean at the largest sweep point over the smallest


@dataclass(frozen=True)
class AttackOutcome:
    attack: str
    expected: str           # denied | absent | bounded
    observed: str
    passed: bool
    detail: str = ""


def judge(attack: str, expected: str, observed: str, detail: str = "") -> AttackOutcome:
    """Outcome whose pass flag is exactly `observed == expected`."""
    return AttackOutcome(attack, expected, observed, observed == expected, detail)


@dataclass(frozen=True)
class AttackReport:
    scenario: str           # always "attacks"
    outcomes: tuple         # (AttackOutcome, ...)


@dataclass(frozen=True)
class AttestationRow:
    requester: str
    authorizer: str
    iterations: int
    attest_ms_mean: float
    attest_ms_std: float
    reference_mean_ms: float
    reference_std_ms: float


@dataclass(frozen=True)
class AttestationReport:
    scenario: str           # always "attest-timing"
    rows: tuple             # (AttestationRow, ...)


# ----------------------------------------------------------------- csv

LATENCY_COLUMNS = (
    "scenario", "mode", "flagged", "row", "requester", "provider",
    "request_label", "iterations", "base_ms_mean", "base_ms_std",
    "verify_ms_mean", "verify_ms_std", "total_ms_mean", "total_ms_std",
    "verify_count", "reference_ms",
)
SCALING_COLUMNS = (
    "scenario", "mode", "slice_count", "samples", "heartbeat_ms_mean",
    "heartbeat_ms_std", "slope", "intercept", "r_squared", "ratio_10_to_1",
)
ATTACK_COLUMNS = ("scenario", "attack", "expected", "observed", "passed", "detail")
ATTESTATION_COLUMNS = (
    "scenario", "requester", "authorizer", "iterations",
    "attest_ms_mean", "attest_ms_std", "reference_mean_ms", "reference_std_ms",
)

_FLAG_SEP = "; "


def _writer(buf):
    return csv.writer(buf, lineterminator="\n")


def latency_to_csv(report: LatencyReport) -> str:
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(LATENCY_COLUMNS)
    flagged = _FLAG_SEP.join(report.flagged)
    for r in report.rows:
        w.writerow([
            report.scenario, report.mode, flagged, r.row, r.requester,
            r.provider, r.request_label, r.iterations, r.base_ms_mean,
            r.base_ms_std, r.verify_ms_mean, r.verify_ms_std, r.total_ms_mean,
            r.total_ms_std, r.verify_count, r.reference_ms,
        ])
    return buf.getvalue()


def latency_from_csv(text: str) -> LatencyReport:
    rows = _read(text, LATENCY_COLUMNS)
    parsed = tuple(
        LatencyRow(
            row=int(r["row"]), requester=r["requester"], provider=r["provider"],
            request_label=r["request_label"], iterations=int(r["iterations"]),
            base_ms_mean=float(r["base_ms_mean"]), base_ms_std=float(r["base_ms_std"]),
            verify_ms_mean=float(r["verify_ms_mean"]),
            verify_ms_std=float(r["verify_ms_std"]),
            total_ms_mean=float(r["total_ms_mean"]),
            total_ms_std=float(r["total_ms_std"]),
            verify_count=int(r["verify_count"]),
            reference_ms=float(r["reference_ms"]),
        )
        for r in rows
    )
    flagged = tuple(rows[0]["flagged"].split(_FLAG_SEP)) if rows and rows[0]["flagged"] else ()
    return LatencyReport(rows[0]["scenario"], rows[0]["mode"], parsed, flagged)


def scaling_to_csv(report: ScalingReport) -> str:
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(SCALING_COLUMNS)
    fit = report.linear_fit
    for p in report.points:
        w.writerow([
            report.scenario, report.mode, p.slice_count, p.samples,
            p.heartbeat_ms_mean, p.heartbeat_ms_std, fit.slope, fit.intercept,
            fit.r_squared, report.ratio_10_to_1,
        ])
    return buf.getvalue()


def scaling_from_csv(text: str) -> ScalingReport:
    rows = _read(text, SCALING_COLUMNS)
    points = tuple(
        ScalingPoint(
            slice_count=int(r["slice_count"]), samples=int(r["samples"]),
            heartbeat_ms_mean=float(r["heartbeat_ms_mean"]),
            heartbeat_ms_std=float(r["heartbeat_ms_std"]),
        )
        for r in rows
    )
    first = rows[0]
    fit = LinearFit(float(first["slope"]), float(first["intercept"]),
                    float(first["r_squared"]))
    return ScalingReport(first["scenario"], first["mode"], points, fit,
                         float(first["ratio_10_to_1"]))


def attacks_to_csv(report: AttackReport) -> str:
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(ATTACK_COLUMNS)
    for o in report.outcomes:
        w.writerow([report.scenario, o.attack, o.expected, o.observed,
                    "true" if o.passed else "false", o.detail])
    return buf.getvalue()


def attacks_from_csv(text: str) -> AttackReport:
    rows = _read(text, ATTACK_COLUMNS)
    outcomes = tuple(
        AttackOutcome(r["attack"], r["expected"], r["observed"],
                      r["passed"] == "true", r["detail"])
        for r in rows
    )
    return AttackReport(rows[0]["scenario"], outcomes)


def attestation_to_csv(report: AttestationReport) -> str:
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(ATTESTATION_COLUMNS)
    for r in report.rows:
        w.writerow([
            report.scenario, r.requester, r.authorizer, r.iterations,
            r.attest_ms_mean, r.attest_ms_std, r.reference_mean_ms,
            r.reference_std_ms,
        ])
    return buf.getvalue()


def attestation_from_csv(text: str) -> AttestationReport:
    rows = _read(text, ATTESTATION_COLUMNS)
    parsed = tuple(
        AttestationRow(
            requester=r["requester"], authorizer=r["authorizer"],
            iterations=int(r["iterations"]),
            attest_ms_mean=float(r["attest_ms_mean"]),
            attest_ms_std=float(r["attest_ms_std"]),
            reference_mean_ms=float(r["reference_mean_ms"]),
            reference_std_ms=float(r["reference_std_ms"]),
        )
        for r in rows
    )
    return AttestationReport(rows[0]["scenario"], parsed)


def _read(text: str, columns: tuple) -> list:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != list(columns):
        raise ValueError(f"unexpected header {header!r}")
    rows = [dict(zip(columns, line)) for line in reader if line]
    if not rows:
        raise ValueError("empty report")
    return rows


# --------------------------------------------------------------- tables

def _table(headers: list, lines: list) -> str:
    cells = [headers] + [[str(c) for c in line] for line in lines]
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
    out = []
    for idx, row in enumerate(cells):
        out.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        if idx == 0:
            out.append("  ".join("-" * w for w in widths))
    return "\n".join(out) + "\n"


def _ms(value: float) -> str:
    return f"{value:.2f}"


def latency_to_table(report: LatencyReport) -> str:
    headers = ["row", "requester", "provider", "request_label", "iters",
               "base_ms", "verify_ms", "total_ms", "vc", "ref_ms"]
    lines = [
        [r.row, r.requester, r.provider, r.request_label, r.iterations,
         f"{_ms(r.base_ms_mean)}±{_ms(r.base_ms_std)}",
         f"{_ms(r.verify_ms_mean)}±{_ms(r.verify_ms_std)}",
         f"{_ms(r.total_ms_mean)}±{_ms(r.total_ms_std)}",
         r.verify_count, _ms(r.reference_ms)]
        for r in report.rows
    ]
    title = f"scenario={report.scenario} mode={report.mode}\n"
    flagged = "".join(f"flagged: {f}\n" for f in report.flagged)
    return title + flagged + _table(headers, lines)


def scaling_to_table(report: ScalingReport) -> str:
    headers = ["slices", "samples", "heartbeat_ms"]
    lines = [
        [p.slice_count, p.samples,
         f"{_ms(p.heartbeat_ms_mean)}±{_ms(p.heartbeat_ms_std)}"]
        for p in report.points
    ]
    fit = report.linear_fit
    title = f"scenario={report.scenario} mode={report.mode}\n"
    tail = (f"fit: slope={fit.slope:.3f} ms/slice  intercept={fit.intercept:.3f}"
            f"  r_squared={fit.r_squared:.3f}  ratio={report.ratio_10_to_1:.2f}\n")
    return title + _table(headers, lines) + tail


def attacks_to_table(report: AttackReport) -> str:
    headers = ["attack", "expected", "observed", "pass", "detail"]
    lines = [
        [o.attack, o.expected, o.observed, "yes" if o.passed else "NO", o.detail]
        for o in report.outcomes
    ]
    return f"scenario={report.scenario}\n" + _table(headers, lines)


def attestation_to_table(report: AttestationReport) -> str:
    headers = ["requester", "authorizer", "iters", "attest_ms", "ref_ms"]
    lines = [
        [r.requester, r.authorizer, r.iterations,
         f"{_ms(r.attest_ms_mean)}±{_ms(r.attest_ms_std)}",
         f"{_ms(r.reference_mean_ms)}±{_ms(r.reference_std_ms)}"]
        for r in report.rows
    ]
    return f"scenario={report.scenario}\n" + _table(headers, lines)


# ------------------------------------------------------------- dispatch

_EMITTERS = {
    LatencyReport: {"csv": latency_to_csv, "table": latency_to_table},
    ScalingReport: {"csv": scaling_to_csv, "table": scaling_to_table},
    AttackReport: {"csv": attacks_to_csv, "table": attacks_to_table},
    AttestationReport: {"csv": attestation_to_csv, "table": attestation_to_table},
}


def emit_report(report, fmt: str) -> str:
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    try:
        return _EMITTERS[type(report)][fmt](report)
    except KeyError:
        raise TypeError(f"cannot emit {type(report).__name__}") from None


def write_report(report, out_dir, fmt: str) -> Path:
    """Write the rendered report to out_dir/<scenario>.<ext> and return the path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ext = "csv" if fmt == "csv" else "txt"
    path = out_dir / f"{report.scenario}.{ext}"
    path.write_text(emit_report(report, fmt), encoding="utf-8")
    return path
