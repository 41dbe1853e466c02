"""Deployment lifecycle: bring a topology up, wire it, authorize it.

Bring-up order: object store → key-holding daemon → pods (registry first,
then each slice) → authorization handshakes for every configured pair →
subscriber seeding → registry registrations through the mesh. Any failure
tears the partial deployment down and reports the failing phase.
"""

from __future__ import annotations

import json
import subprocess
import sys
import threading
import time
from pathlib import Path

from .. import encoding, httpd, protocol
from ..daemon import DaemonServer, DaemonService
from ..httpd import HttpError, Router
from ..netutil import HttpClient, wait_for_health
from ..store import ObjectStore, StoreClient, StoreServer
from .pods import PodGroup, resolve_targets
from .topology import (
    Subscriber, TopologySpec, TopologyError, extend_with_slice, plan_pairs,
    plan_slice, plan_topology,
)


class DeployError(RuntimeError):
    def __init__(self, phase: str, reason: str):
        super().__init__(f"{phase}: {reason}")
        self.phase = phase
        self.reason = reason


class ProcPod:
    """A pod running as its own OS process (same layout as PodGroup)."""

    def __init__(self, plan, config: dict, config_path: Path):
        self.plan = plan
        config_path.parent.mkdir(parents=True, exist_ok=True)
        config_path.write_text(json.dumps(config))
        self.process = subprocess.Popen(
            [sys.executable, "-m", "wavecore.orchestrator.podmain", str(config_path)],
            stdout=subprocess.PIPE,
            stderr=subprocess.STDOUT,
            text=True,
        )
        self._describe = self._await_ready()

    def _await_ready(self) -> dict:
        deadline = time.monotonic() + 30.0
        while time.monotonic() < deadline:
            line = self.process.stdout.readline()
            if not line:
                code = self.process.poll()
                raise RuntimeError(f"pod process exited early (rc={code})")
            if line.startswith("READY "):
                info = json.loads(line[len("READY "):])
                # keep draining so the child never blocks on a full pipe
                threading.Thread(
                    target=self._drain, name=f"pod-{self.plan.label}-drain", daemon=True
                ).start()
                return info
        self.process.kill()
        raise RuntimeError("pod process never became ready")

    def _drain(self) -> None:
        try:
            for _ in self.process.stdout:
                pass
        except ValueError:
            pass

    def describe(self) -> dict:
        return dict(self._describe)

    def stop(self) -> None:
        if self.process.poll() is None:
            self.process.terminate()
            try:
                self.process.wait(timeout=10)
            except subprocess.TimeoutExpired:
                self.process.kill()
                self.process.wait(timeout=10)


class Deployment:
    """A live multi-slice core with its authorization mesh."""

    def __init__(self, spec: TopologySpec):
        self.spec = spec
        self.plan = plan_topology(spec)
        self.data_dir = Path(spec.data_dir)
        self.http = HttpClient(timeout=30.0)
        self.pods: dict[str, object] = {}
        self._info: dict[str, dict] = {}       # label -> describe()
        self._label_by_entity: dict[str, str] = {}
        self.grants: dict[tuple, dict] = {}    # (requester, provider) -> grant
        self.store_server = None
        self.daemon_server = None
        self.daemon_service = None
        self._down = False
        self._phase = "plan"

        try:
            self._phase = "store"
            self.data_dir.mkdir(parents=True, exist_ok=True)
            self.store_server = StoreServer(
                ObjectStore(self.data_dir / "store"),
                self.plan.store_host, self.plan.store_port,
            )
            self.store_endpoints = [(self.plan.store_host, self.store_server.port)]
            self.store = StoreClient(self.store_endpoints, http=self.http)

            self._phase = "daemon"
            self.daemon_service = DaemonService(
                StoreClient(self.store_endpoints), self.data_dir / "daemon"
            )
            self.daemon_server = DaemonServer(
                self.daemon_service, self.plan.daemon_host, self.plan.daemon_port
            )

            self._start_slice_pods(self.plan.pods)
            self._bootstrap_slices(self.spec.slices, self.spec.subscribers)
        except BaseException as e:
            phase = self._phase
            self.down()
            raise DeployError(phase, str(e)) from e

    # ------------------------------------------------------------- bring-up

    def _start_slice_pods(self, pod_plans) -> None:
        for pod_plan in pod_plans:
            self._phase = f"pod {pod_plan.label}"
            self.pods[pod_plan.label] = self._build_pod(pod_plan)
        self._phase = "wiring"
        self._refresh_info(pod_plans)
        if self.spec.runtime == "threads":
            for pod_plan in pod_plans:
                targets = resolve_targets(
                    pod_plan.vnf_type, pod_plan.slice_domain, self._lookup
                )
                self.pods[pod_plan.label].set_targets(targets)
        self._phase = "health"
        self._await_health(pod_plans)

    def _bootstrap_slices(self, domains, subscribers) -> None:
        if self.spec.mode == "wave":
            wanted = set(domains)
            pairs = [
                p for p in self.plan.pairs
                if self.pods[p.requester].plan.slice_domain in wanted
                or self.pods[p.provider].plan.slice_domain in wanted
            ]
            for pair in pairs:
                self._phase = f"handshake {pair.requester}->{pair.provider}"
                self._grant(pair.requester, pair.provider)
        for domain in domains:
            self._phase = f"seed {domain}"
            self._seed(domain, subscribers)
        for domain in domains:
            self._phase = f"register {domain}"
            self._register(domain)
        self._phase = "ready"

    def _build_pod(self, pod_plan):
        if self.spec.runtime == "procs":
            config = {
                "plan": pod_plan.__dict__,
                "daemon_host": self.plan.daemon_host,
                "daemon_port": self.daemon_server.port,
                "store_endpoints": [
                    [host, port] for host, port in self.store_endpoints
                ],
                "mode": self.spec.mode,
                "identity": self.spec.identity,
                "targets": {
                    name: [ref.pod, ref.host, ref.port]
                    for name, ref in resolve_targets(
                        pod_plan.vnf_type, pod_plan.slice_domain, self._plan_lookup
                    ).items()
                },
                "extras": dict(self.spec.vnf_extras),
            }
            return ProcPod(
                pod_plan, config, self.data_dir / "pods" / f"{pod_plan.label}.json"
            )
        return PodGroup(
            pod_plan,
            daemon_host=self.plan.daemon_host,
            daemon_port=self.daemon_server.port,
            store_endpoints=self.store_endpoints,
            mode=self.spec.mode,
            identity=self.spec.identity,
            extras=dict(self.spec.vnf_extras),
        )

    def _refresh_info(self, pod_plans) -> None:
        for pod_plan in pod_plans:
            info = self.pods[pod_plan.label].describe()
            self._info[pod_plan.label] = info
            self._label_by_entity[info["entity_hash"]] = pod_plan.label

    def _lookup(self, label: str):
        info = self._info[label]
        return info["ip"], info["public_port"], info["driver_port"]

    def _plan_lookup(self, label: str):
        pod_plan = self.plan.pod(label)
        return pod_plan.ip, pod_plan.public_port, pod_plan.driver_port

    def _await_health(self, pod_plans) -> None:
        wait_for_health(self.plan.store_host, self.store_server.port)
        wait_for_health(self.plan.daemon_host, self.daemon_server.port)
        for pod_plan in pod_plans:
            info = self._info[pod_plan.label]
            wait_for_health(info["ip"], info["wscp_port"])
            wait_for_health(info["ip"], info["driver_port"])
            wait_for_health(info["ip"], info["admin_port"])

    def _grant(self, requester: str, provider: str) -> dict:
        requester_info = self._info[requester]
        provider_info = self._info[provider]
        response = self.http.request_json(
            "POST", provider_info["ip"], provider_info["wscp_port"], "/admin/grants",
            {
                "requester_hash": requester_info["entity_hash"],
                "label": requester,
                "slice_domain": requester_info["slice_domain"],
                "source_ip": requester_info["ip"],
            },
        )
        if response.status != 200:
            raise RuntimeError(
                f"grant failed ({response.status}): {response.body.decode(errors='replace')}"
            )
        grant = response.json()
        self.grants[(requester, provider)] = grant
        return grant

    def _seed(self, domain: str, subscribers) -> None:
        if not subscribers:
            return
        info = self._info[f"{domain}-udr"]
        for sub in subscribers:
            response = self.http.request_json(
                "POST", info["ip"], info["driver_port"], "/driver/subscribers",
                {"supi": sub.supi, "key": sub.key, "sqn": 0},
            )
            if response.status != 201:
                raise RuntimeError(f"seeding {sub.supi} failed ({response.status})")

    def _register(self, domain: str) -> None:
        for vnf_type in ("amf", "smf"):
            info = self._info[f"{domain}-{vnf_type}"]
            response = self.http.request_json(
                "POST", info["ip"], info["driver_port"], "/driver/register-nf", {}
            )
            if response.status != 200:
                raise RuntimeError(
                    f"{domain}-{vnf_type} registration failed ({response.status}): "
                    f"{response.body.decode(errors='replace')}"
                )

    # ------------------------------------------------------------ lifecycle

    def add_slice(self, domain: str, subscribers=()) -> None:
        new_spec = extend_with_slice(self.spec, domain)
        index = len(self.spec.slices) + 1
        new_pods = plan_slice(new_spec, domain, index)
        new_pairs = [
            p for p in plan_pairs(new_spec)
            if p not in self.plan.pairs
        ]
        try:
            self._start_slice_pods(new_pods)
            self.spec = new_spec
            self.plan.spec = new_spec
            self.plan.pods.extend(new_pods)
            self.plan.pairs.extend(new_pairs)
            self._bootstrap_slices(
                [domain], list(self.spec.subscribers) + list(subscribers)
            )
        except BaseException as e:
            phase = self._phase
            for pod_plan in new_pods:
                pod = self.pods.pop(pod_plan.label, None)
                if pod is not None:
                    pod.stop()
            raise DeployError(phase, str(e)) from e

    def down(self) -> None:
        """Stop every process/listener; data files are kept for audit."""
        if self._down:
            return
        self._down = True
        for pod in self.pods.values():
            try:
                pod.stop()
            except Exception:
                pass
        self.pods.clear()
        if self.daemon_server is not None:
            self.daemon_server.stop()
        if self.store_server is not None:
            self.store_server.stop()
        self.http.close()

    # ----------------------------------------------------------- inspection

    def describe(self) -> dict:
        return {
            "name": self.spec.name,
            "mode": self.spec.mode,
            "identity": self.spec.identity,
            "runtime": self.spec.runtime,
            "data_dir": str(self.data_dir),
            "slices": list(self.spec.slices),
            "store": {"host": self.plan.store_host, "port": self.store_server.port},
            "daemon": {"host": self.plan.daemon_host, "port": self.daemon_server.port},
            "pods": {label: dict(info) for label, info in self._info.items()},
        }

    def label_for(self, entity_hash_hex: str) -> str:
        return self._label_by_entity.get(entity_hash_hex, entity_hash_hex[:12])

    def pod_info(self, label: str) -> dict:
        return dict(self._info[label])

    def attestation_census(self) -> list:
        """Every attestation in the store, mapped back to pod labels."""
        rows = []
        after = -1
        while True:
            page = self.store.list_objects(
                kind=protocol.KIND_ATTESTATION, after_seq=after, limit=512
            )
            if not page:
                break
            rows.extend(page)
            after = page[-1]["seq"]
            if len(page) < 512:
                break
        census = []
        for row in rows:
            record = encoding.decode_attestation_record(bytes.fromhex(row["payload"]))
            census.append({
                "object_id": row["id"],
                "attestation_hash": record["attestation_hash"].hex(),
                "issuer": self.label_for(record["issuer_hash"].hex()),
                "subject": self.label_for(record["subject_hash"].hex()),
            })
        return census

    def intercept_records(self, label: str, since_seq: int = 0,
                          limit: int = 4096) -> tuple:
        """(records, next_seq) from one pod's interception proxy."""
        info = self._info[label]
        response = self.http.request(
            "GET", info["ip"], info["admin_port"],
            f"/admin/records?since_seq={since_seq}&limit={limit}",
        )
        body = response.json()
        return body["records"], body["next_seq"]

    def record_cursor(self, label: str) -> int:
        info = self._info[label]
        response = self.http.request("GET", info["ip"], info["admin_port"], "/admin/health")
        return response.json()["count"]

    def driver_json(self, label: str, method: str, path: str, payload=None) -> dict:
        """Call a pod's driver endpoint (ungated, non-mesh)."""
        info = self._info[label]
        if payload is None:
            response = self.http.request(method, info["ip"], info["driver_port"], path)
        else:
            response = self.http.request_json(
                method, info["ip"], info["driver_port"], path, payload
            )
        data = response.json() if response.body else {}
        if response.status >= 400:
            raise RuntimeError(f"{label} {path} -> {response.status}: {data}")
        return data

    def wscp_json(self, label: str, method: str, path: str, payload=None) -> dict:
        info = self._info[label]
        if payload is None:
            response = self.http.request(method, info["ip"], info["wscp_port"], path)
        else:
            response = self.http.request_json(
                method, info["ip"], info["wscp_port"], path, payload
            )
        data = response.json() if response.body else {}
        if response.status >= 400:
            raise RuntimeError(f"{label} {path} -> {response.status}: {data}")
        return data

    def rscp_admin_json(self, label: str, method: str, path: str, payload=None) -> dict:
        info = self._info[label]
        if payload is None:
            response = self.http.request(method, info["ip"], info["admin_port"], path)
        else:
            response = self.http.request_json(
                method, info["ip"], info["admin_port"], path, payload
            )
        data = response.json() if response.body else {}
        if response.status >= 400:
            raise RuntimeError(f"{label} {path} -> {response.status}: {data}")
        return data


class ControlServer:
    """Small admin listener so a foreground deployment can be driven
    from other processes (down / add-slice / describe)."""

    def __init__(self, deployment: Deployment, host: str = "127.0.0.1", port: int = 0):
        self.deployment = deployment
        self.closed = threading.Event()
        router = Router()
        router.add("GET", "/control/describe", lambda req: deployment.describe())
        router.add("POST", "/control/add-slice", self._add_slice)
        router.add("POST", "/control/down", self._down)
        router.add("GET", "/healthz", lambda req: {"status": "ok"})
        self._server = httpd.start_server(host, port, router)
        self.host = host
        self.port = self._server.bound_port

    def _add_slice(self, request):
        body = request.json()
        domain = str(body.get("slice_domain", ""))
        subscribers = [
            Subscriber(str(s.get("supi", "")), str(s.get("key", "")))
            for s in body.get("subscribers", [])
        ]
        try:
            self.deployment.add_slice(domain, subscribers)
        except (TopologyError, DeployError) as e:
            raise HttpError(400, "add-slice-failed", str(e)) from e
        return {"slices": list(self.deployment.spec.slices)}

    def _down(self, request):
        self.deployment.down()
        self.closed.set()
        return {"status": "stopped"}

    def stop(self) -> None:
        httpd.stop_server(self._server)
