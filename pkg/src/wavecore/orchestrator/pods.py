"""Pod assembly: one network function plus its two sidecars on one address.

Build order inside a pod is fixed: the grant/verify agent bootstraps its
entity first (the function is never reachable before its authorization
side exists), then the function's gated listeners start, then the
interception proxy opens the pod's only public port. The pod gate secret
is generated here and shared only between the proxy and the function's
service listener — it never appears in any config or on the network.
"""

from __future__ import annotations

import secrets
import time
from dataclasses import dataclass

from ..daemon import DaemonClient
from ..sidecar import RscpProxy, WscpAgent, WscpServer
from ..store import StoreClient
from ..vnf import VNF_CLASSES
from ..vnf.base import TargetRef, VnfConfig
from .topology import PodPlan


@dataclass
class PodPorts:
    public: int
    service: int
    wscp: int
    driver: int
    admin: int


class PodGroup:
    """A live pod: agent + server, function, interception proxy."""

    def __init__(self, plan: PodPlan, *, daemon_host: str, daemon_port: int,
                 store_endpoints: list, mode: str = "wave", identity: str = "ip",
                 targets: dict | None = None, extras: dict | None = None,
                 clock=time.time):
        self.plan = plan
        self.gate_value = secrets.token_hex(16)
        baseline = mode == "baseline"

        self.agent = WscpAgent(
            label=plan.label,
            slice_domain=plan.slice_domain,
            vnf_type=plan.vnf_type,
            daemon=DaemonClient(daemon_host, daemon_port),
            store=StoreClient(store_endpoints),
            mode="baseline" if baseline else identity,
            clock=clock,
        )
        self.wscp = WscpServer(self.agent, plan.ip, plan.wscp_port)

        config = VnfConfig(
            vnf_type=plan.vnf_type,
            slice_domain=plan.slice_domain,
            pod=plan.label,
            pod_ip=plan.ip,
            service_port=plan.service_port,
            driver_port=plan.driver_port,
            gate_value=self.gate_value,
            wscp_host=plan.ip,
            wscp_port=self.wscp.port,
            identity_mode="signed" if (identity == "signed" and not baseline) else "ip",
            targets=dict(targets or {}),
            extras=dict(extras or {}),
        )
        self.vnf = VNF_CLASSES[plan.vnf_type](config)

        self.rscp = RscpProxy(
            pod=plan.label,
            listen_host=plan.ip, listen_port=plan.public_port,
            upstream_host=plan.ip, upstream_port=self.vnf.service_port,
            wscp_host=plan.ip, wscp_port=self.wscp.port,
            admin_host=plan.ip, admin_port=plan.admin_port,
            gate_value=self.gate_value,
            mode="baseline" if baseline else "enforce",
        )
        # peers reach this pod at the proxy's public address
        self.vnf.config.extras.setdefault(
            "public_address", f"{plan.ip}:{self.rscp.listen_port}"
        )

    @property
    def ports(self) -> PodPorts:
        return PodPorts(
            public=self.rscp.listen_port,
            service=self.vnf.service_port,
            wscp=self.wscp.port,
            driver=self.vnf.driver_port,
            admin=self.rscp.admin_port,
        )

    def set_targets(self, targets: dict) -> None:
        self.vnf.config.targets.update(targets)

    def describe(self) -> dict:
        ports = self.ports
        return {
            "label": self.plan.label,
            "slice_domain": self.plan.slice_domain,
            "vnf_type": self.plan.vnf_type,
            "ip": self.plan.ip,
            "entity_hash": self.agent.entity_hash.hex(),
            "public_port": ports.public,
            "service_port": ports.service,
            "wscp_port": ports.wscp,
            "driver_port": ports.driver,
            "admin_port": ports.admin,
        }

    def stop(self) -> None:
        self.rscp.stop()
        self.vnf.stop()
        self.wscp.stop()


def resolve_targets(vnf_type: str, slice_domain: str, lookup) -> dict:
    """Outbound peers for one function.

    `lookup(label) -> (ip, public_port, driver_port)`; SBA peers are wired
    to the provider pod's public (intercepted) port, the user-plane setup
    channel to the UPF pod's driver port.
    """
    targets = {}

    def public(name, label):
        ip, public_port, _ = lookup(label)
        targets[name] = TargetRef(label, ip, public_port)

    if vnf_type == "amf":
        public("nrf", "nrf")
        public("ausf", f"{slice_domain}-ausf")
        public("smf", f"{slice_domain}-smf")
    elif vnf_type == "smf":
        public("nrf", "nrf")
        public("amf", f"{slice_domain}-amf")
        upf_label = f"{slice_domain}-upf"
        ip, _, driver_port = lookup(upf_label)
        targets["upf-n4"] = TargetRef(upf_label, ip, driver_port)
    elif vnf_type == "udm":
        public("udr", f"{slice_domain}-udr")
    elif vnf_type == "ausf":
        public("udm", f"{slice_domain}-udm")
    return targets
