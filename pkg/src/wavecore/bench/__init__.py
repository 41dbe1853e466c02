"""Benchmark harness: latency decomposition, scaling sweep, attack suite."""

from .labels import (
    ATTESTATION_PAIR_ROWS,
    REFERENCE_MEAN_MS,
    REQUEST_ROWS,
    VERIFY_LEDGER,
    classify,
    rows_for_group,
)
from .latency import (
    ScenarioError,
    bench_aka,
    bench_attestation_timing,
    bench_pdu,
    bench_registration,
)
from .scaling import bench_scaling, measure_point
from .attacks import (
    ATTACK_IDS,
    attack_authz_flooding,
    attack_code_injection_surface,
    attack_credential_phishing,
    attack_token_hijack_replay,
    attack_token_leakage,
    bench_attacks,
    set_replay_protection,
)
from .reports import (
    AttackOutcome,
    AttackReport,
    AttestationReport,
    AttestationRow,
    LatencyReport,
    LatencyRow,
    LinearFit,
    ScalingPoint,
    ScalingReport,
    emit_report,
    write_report,
)

__all__ = [
    "ATTACK_IDS",
    "ATTESTATION_PAIR_ROWS",
    "AttackOutcome",
    "AttackReport",
    "AttestationReport",
    "AttestationRow",
    "LatencyReport",
    "LatencyRow",
    "LinearFit",
    "REFERENCE_MEAN_MS",
    "REQUEST_ROWS",
    "ScalingPoint",
    "ScalingReport",
    "ScenarioError",
    "VERIFY_LEDGER",
    "attack_authz_flooding",
    "attack_code_injection_surface",
    "attack_credential_phishing",
    "attack_token_hijack_replay",
    "attack_token_leakage",
    "bench_aka",
    "bench_attacks",
    "bench_attestation_timing",
    "bench_pdu",
    "bench_registration",
    "bench_scaling",
    "classify",
    "emit_report",
    "measure_point",
    "rows_for_group",
    "set_replay_protection",
    "write_report",
]
