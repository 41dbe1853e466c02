"""Command-line entry points: deployment lifecycle and benchmark scenarios.

``up`` runs a topology in the foreground with a small control listener so
``down`` and ``add-slice`` can reach it from other processes through a
state file under the deployment's data directory.  ``bench`` stands up a
disposable deployment (or sweeps several), runs one scenario, renders the
report, and exits nonzero iff a scenario invariant or attack expectation
fails.
"""

from __future__ import annotations

import json
import os
import signal
import tempfile
from pathlib import Path

import click
import yaml

from . import bench as benchlib
from .bench import labels
from .bench.reports import AttackReport, emit_report, write_report
from .netutil import HttpClient, TransportError
from .orchestrator import (
    ControlServer,
    Deployment,
    DeployError,
    Subscriber,
    TopologyError,
    TopologySpec,
    load_topology,
)

STATE_FILE = "deployment.json"
SCENARIOS = ("registration", "aka", "pdu", "scaling", "attacks", "attest-timing")
DEFAULT_SUPI = "imsi-001010000000001"
DEFAULT_KEY = "00112233445566778899aabbccddeeff"

# CLI gates mirror the scenario invariants; tolerances live here so the
# exit code has one documented source of truth.
SCALING_R2_MIN = 0.8
SCALING_MIN_POINTS_FOR_FIT = 5
TREND_SLACK = 0.15


@click.group()
def main():
    """Desk-scale 5G core with sidecar-enforced decentralized authorization."""


# ------------------------------------------------------------- lifecycle

def _data_dir(option: str | None) -> Path:
    return Path(option or os.environ.get("WAVECORE_DATA_DIR")
                or TopologySpec().data_dir)


def _read_state(data_dir: Path) -> dict:
    path = data_dir / STATE_FILE
    if not path.exists():
        raise click.ClickException(
            f"no running deployment found ({path} missing)"
        )
    return json.loads(path.read_text())


@main.command()
@click.argument("topology", type=click.Path(exists=True, dir_okay=False))
def up(topology):
    """Run the TOPOLOGY file in the foreground until stopped."""
    try:
        spec = load_topology(topology)
    except (TopologyError, yaml.YAMLError) as e:
        raise click.ClickException(f"bad topology: {e}") from e
    try:
        deployment = Deployment(spec)
    except DeployError as e:
        raise click.ClickException(f"bring-up failed during {e.phase}: {e.reason}") from e

    control_port = spec.base_port + 2 if spec.base_port else 0
    control = ControlServer(deployment, host=deployment.plan.daemon_host,
                            port=control_port)
    state_path = Path(spec.data_dir) / STATE_FILE
    state_path.write_text(json.dumps({
        "name": spec.name,
        "control_host": control.host,
        "control_port": control.port,
        "pid": os.getpid(),
    }))

    for signum in (signal.SIGINT, signal.SIGTERM):
        signal.signal(signum, lambda *_: control.closed.set())

    info = deployment.describe()
    click.echo(f"deployment {spec.name} ready: {len(spec.slices)} slice(s), "
               f"mode={spec.mode} identity={spec.identity}")
    click.echo(f"control listener {control.host}:{control.port}")
    for label in sorted(info["pods"]):
        pod = info["pods"][label]
        click.echo(f"  {label:<16} {pod['ip']}:{pod['public_port']}")
    try:
        # timed wait so the signal handler's set() is picked up promptly
        while not control.closed.wait(timeout=0.5):
            pass
    except KeyboardInterrupt:
        pass
    finally:
        deployment.down()
        control.stop()
        state_path.unlink(missing_ok=True)
    click.echo("deployment stopped")


@main.command()
@click.option("--data-dir", default=None,
              help="Data directory of the running deployment.")
def down(data_dir):
    """Stop the deployment recorded under the data directory."""
    state = _read_state(_data_dir(data_dir))
    client = HttpClient(timeout=30.0)
    try:
        client.request_json("POST", state["control_host"],
                            state["control_port"], "/control/down", {})
    except TransportError as e:
        raise click.ClickException(f"control listener unreachable: {e}") from e
    finally:
        client.close()
    click.echo(f"deployment {state['name']} stopped")


@main.command("add-slice")
@click.argument("slice_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--data-dir", default=None,
              help="Data directory of the running deployment.")
def add_slice(slice_file, data_dir):
    """Add the slice described by SLICE_FILE to the running deployment."""
    with open(slice_file, "r", encoding="utf-8") as fh:
        body = yaml.safe_load(fh) or {}
    if not isinstance(body, dict) or not body.get("slice_domain"):
        raise click.ClickException("slice file needs a slice_domain mapping")
    state = _read_state(_data_dir(data_dir))
    client = HttpClient(timeout=120.0)
    try:
        response = client.request_json(
            "POST", state["control_host"], state["control_port"],
            "/control/add-slice",
            {
                "slice_domain": str(body["slice_domain"]),
                "subscribers": body.get("subscribers", []),
            },
        )
    except TransportError as e:
        raise click.ClickException(f"control listener unreachable: {e}") from e
    finally:
        client.close()
    data = response.json() or {}
    if response.status != 200:
        raise click.ClickException(f"add-slice refused: {data.get('reason')}")
    click.echo(f"slices now: {', '.join(data['slices'])}")


# ----------------------------------------------------------------- bench

def _bench_spec(scenario: str, topology: str | None, mode: str | None,
                identity: str | None, data_dir: str) -> TopologySpec:
    if topology:
        spec = load_topology(topology)
    else:
        spec = TopologySpec(
            name=f"bench-{scenario}",
            base_port=0,
            slices=["slice1", "slice2"] if scenario == "attacks" else ["slice1"],
            identity="signed" if scenario == "attacks" else "ip",
        )
        spec.data_dir = data_dir
    if mode:
        spec.mode = mode
    if identity:
        spec.identity = identity
    if not spec.subscribers:
        spec.subscribers = [Subscriber(DEFAULT_SUPI, DEFAULT_KEY)]
    return spec


def _latency_failures(report) -> list:
    failures = []
    expected = labels.rows_for_group(report.scenario)
    if len(report.rows) != len(expected):
        failures.append(
            f"{len(report.rows)} rows, expected {len(expected)}"
        )
    for row in report.rows:
        if report.mode == "wave":
            if row.total_ms_mean < row.base_ms_mean:
                failures.append(f"row {row.row}: total below base")
            if row.verify_ms_mean <= 0.0:
                failures.append(f"row {row.row}: no verification time")
        elif row.verify_ms_mean != 0.0 or row.verify_count != 0:
            failures.append(f"row {row.row}: verification in baseline mode")
    if report.mode == "wave":
        counts = {r.row: r.verify_count for r in report.rows}
        if report.scenario == "registration":
            bad = [n for n, c in counts.items() if c != 1]
            if bad:
                failures.append(f"registration rows {bad} not single-verify")
        if report.scenario == "aka" and counts.get(4) != labels.NESTED_AUTH_VERIFY_COUNT:
            failures.append(
                f"authentication window nested {counts.get(4)} checks, "
                f"expected {labels.NESTED_AUTH_VERIFY_COUNT}"
            )
    return failures


def _scaling_failures(report) -> list:
    failures = []
    counts = [p.slice_count for p in report.points]
    if counts != sorted(counts):
        failures.append("points out of order")
    fit = report.linear_fit
    if not 0.0 <= fit.r_squared <= 1.0:
        failures.append(f"r_squared out of range: {fit.r_squared}")
    if report.mode != "wave":
        # without the verification layer there is no trend to demand;
        # the sweep is informational
        return failures
    means = [p.heartbeat_ms_mean for p in report.points]
    for prev, cur in zip(means, means[1:]):
        if cur < prev * (1.0 - TREND_SLACK):
            failures.append(f"trend decreases beyond {TREND_SLACK:.0%} slack")
            break
    if len(report.points) >= SCALING_MIN_POINTS_FOR_FIT and fit.r_squared < SCALING_R2_MIN:
        failures.append(f"r_squared {fit.r_squared:.3f} below {SCALING_R2_MIN}")
    return failures


def _attestation_failures(report) -> list:
    failures = []
    if len(report.rows) != len(labels.ATTESTATION_PAIR_ROWS):
        failures.append(f"{len(report.rows)} pair rows, expected "
                        f"{len(labels.ATTESTATION_PAIR_ROWS)}")
    failures.extend(
        f"{r.requester}->{r.authorizer}: non-positive mean"
        for r in report.rows if r.attest_ms_mean <= 0.0
    )
    return failures


@main.command()
@click.argument("scenario", type=click.Choice(SCENARIOS))
@click.option("--topology", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Topology file (default: disposable built-in).")
@click.option("--iterations", type=click.IntRange(min=1), default=None,
              help="Flow repetitions (default 20; scaling beats per slice, "
                   "default 200).")
@click.option("--mode", type=click.Choice(["wave", "baseline"]), default=None)
@click.option("--identity", type=click.Choice(["ip", "signed"]), default=None)
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Directory for the rendered report file.")
@click.option("--format", "fmt", type=click.Choice(["csv", "table"]),
              default="table")
def bench(scenario, topology, iterations, mode, identity, out, fmt):
    """Run one benchmark scenario against a disposable deployment."""
    with tempfile.TemporaryDirectory(prefix="wavecore-bench-") as tmp:
        spec = _bench_spec(scenario, topology, mode, identity, tmp)
        try:
            if scenario == "scaling":
                report = benchlib.bench_scaling(
                    spec, iterations=iterations or benchlib.scaling.DEFAULT_ITERATIONS
                )
                failures = _scaling_failures(report)
            else:
                report, failures = _run_deployed(scenario, spec, iterations)
        except (DeployError, TopologyError, benchlib.ScenarioError) as e:
            raise click.ClickException(str(e)) from e
        click.echo(emit_report(report, fmt), nl=False)
        if scenario in ("registration", "aka", "pdu"):
            click.echo(
                f"reference mean over the full request surface: "
                f"{labels.REFERENCE_MEAN_MS} ms (comparison only)"
            )
        if out:
            path = write_report(report, out, fmt)
            click.echo(f"wrote {path}")
    for failure in failures:
        click.echo(f"FAIL: {failure}", err=True)
    if failures:
        raise SystemExit(1)


def _run_deployed(scenario: str, spec: TopologySpec, iterations: int | None):
    deployment = Deployment(spec)
    try:
        n = iterations or benchlib.latency.DEFAULT_ITERATIONS
        if scenario == "registration":
            report = benchlib.bench_registration(deployment, n)
            return report, _latency_failures(report)
        if scenario == "aka":
            report = benchlib.bench_aka(deployment, n)
            return report, _latency_failures(report)
        if scenario == "pdu":
            report = benchlib.bench_pdu(deployment, n)
            return report, _latency_failures(report)
        if scenario == "attest-timing":
            report = benchlib.bench_attestation_timing(deployment, n)
            return report, _attestation_failures(report)
        outcomes = benchlib.bench_attacks(deployment)
        report = AttackReport("attacks", tuple(outcomes))
        failures = [f"attack {o.attack}: observed {o.observed}, "
                    f"expected {o.expected} ({o.detail})"
                    for o in outcomes if not o.passed]
        return report, failures
    finally:
        deployment.down()
