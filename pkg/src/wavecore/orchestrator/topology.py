"""Deployment topology: config schema, validation, and address planning.

A topology names N slices that each run their own amf/smf/upf/udm/udr/ausf
pod while sharing one registry (nrf) pod, one object store, and one
key-holding daemon. The planner assigns every pod a distinct loopback
address (``127.31.slice.pod``) plus a deterministic port block, so runs
are reproducible and TCP source addresses identify pods.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

import yaml

VNF_ORDER = ("amf", "smf", "upf", "udm", "udr", "ausf")
PROVIDER_TYPES = ("nrf", "amf", "smf", "udm", "udr", "ausf")
DEFAULT_PAIR_TYPES = (
    ("amf", "nrf"),
    ("smf", "nrf"),
    ("udm", "udr"),
    ("ausf", "udm"),
    ("amf", "ausf"),
    ("smf", "amf"),
    ("amf", "smf"),
)
MODES = ("wave", "baseline")
IDENTITIES = ("ip", "signed")
RUNTIMES = ("threads", "procs")

PORTS_PER_POD = 10      # public, service, wscp, driver, admin + spare
PORTS_PER_SLICE = 100
DEFAULT_BASE_PORT = 27000
MAX_SLICES = 200


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class Subscriber:
    supi: str
    key: str                # hex-encoded SIM secret


@dataclass
class TopologySpec:
    name: str = "wavecore"
    mode: str = "wave"                  # wave | baseline
    identity: str = "ip"                # ip | signed
    runtime: str = "threads"            # threads | procs
    base_port: int = DEFAULT_BASE_PORT  # 0 → ephemeral (threads runtime only)
    data_dir: str = "wavecore-data"
    slices: list = field(default_factory=lambda: ["slice1"])
    subscribers: list = field(default_factory=list)      # [Subscriber]
    pair_types: list = field(default_factory=lambda: list(DEFAULT_PAIR_TYPES))
    inter_slice_edges: list = field(default_factory=list)
    # [( (rtype, rslice), (ptype, pslice) )]
    vnf_extras: dict = field(default_factory=dict)       # merged into every VnfConfig


@dataclass(frozen=True)
class PodPlan:
    label: str
    slice_domain: str       # "" for the shared registry pod
    vnf_type: str
    ip: str
    public_port: int
    service_port: int
    wscp_port: int
    driver_port: int
    admin_port: int


@dataclass(frozen=True)
class PairPlan:
    requester: str          # pod label
    provider: str           # pod label


@dataclass
class DeploymentPlan:
    spec: TopologySpec
    store_host: str
    store_port: int
    daemon_host: str
    daemon_port: int
    pods: list              # [PodPlan], registry first
    pairs: list             # [PairPlan]

    def pod(self, label: str) -> PodPlan:
        for pod in self.pods:
            if pod.label == label:
                return pod
        raise KeyError(label)

    def slice_pods(self, slice_domain: str) -> list:
        return [p for p in self.pods if p.slice_domain == slice_domain]


def load_topology(path) -> TopologySpec:
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise TopologyError("topology file must hold a mapping")
    return spec_from_dict(data)


def spec_from_dict(data: dict) -> TopologySpec:
    spec = TopologySpec()
    spec.name = str(data.get("name", spec.name))
    spec.mode = str(data.get("mode", spec.mode))
    spec.identity = str(data.get("identity", spec.identity))
    spec.runtime = str(data.get("runtime", spec.runtime))
    spec.base_port = int(
        os.environ.get("WAVECORE_BASE_PORT", data.get("base_port", spec.base_port))
    )
    spec.data_dir = str(
        os.environ.get("WAVECORE_DATA_DIR", data.get("data_dir", spec.data_dir))
    )

    slices = data.get("slices", spec.slices)
    parsed_slices = []
    for entry in slices:
        if isinstance(entry, dict):
            parsed_slices.append(str(entry.get("slice_domain", "")))
        else:
            parsed_slices.append(str(entry))
    spec.slices = parsed_slices

    spec.subscribers = [
        Subscriber(supi=str(s.get("supi", "")), key=str(s.get("key", "")))
        for s in data.get("subscribers", [])
    ]
    pairs = data.get("authorization_pairs")
    if pairs is not None:
        spec.pair_types = [
            (str(p[0]).lower(), str(p[1]).lower()) for p in pairs
        ]
    edges = []
    for edge in data.get("inter_slice_edges", []):
        requester = str(edge.get("requester", ""))
        provider = str(edge.get("provider", ""))
        edges.append((_parse_endpoint(requester), _parse_endpoint(provider)))
    spec.inter_slice_edges = edges
    spec.vnf_extras = dict(data.get("vnf_extras", {}))
    return spec


def _parse_endpoint(text: str):
    """'amf@slice2' → ('amf', 'slice2')."""
    vnf_type, sep, slice_domain = text.partition("@")
    if not sep or not vnf_type or not slice_domain:
        raise TopologyError(f"expected vnf@slice, got {text!r}")
    return (vnf_type.lower(), slice_domain)


def _pod_label(vnf_type: str, slice_domain: str) -> str:
    return "nrf" if vnf_type == "nrf" else f"{slice_domain}-{vnf_type}"


def validate(spec: TopologySpec) -> None:
    if spec.mode not in MODES:
        raise TopologyError(f"mode must be one of {MODES}, got {spec.mode!r}")
    if spec.identity not in IDENTITIES:
        raise TopologyError(f"identity must be one of {IDENTITIES}, got {spec.identity!r}")
    if spec.runtime not in RUNTIMES:
        raise TopologyError(f"runtime must be one of {RUNTIMES}, got {spec.runtime!r}")
    if spec.base_port == 0 and spec.runtime == "procs":
        raise TopologyError("procs runtime needs a fixed base_port")
    if spec.base_port and not 1024 <= spec.base_port <= 60000:
        raise TopologyError(f"base_port out of range: {spec.base_port}")
    if not spec.slices:
        raise TopologyError("at least one slice required")
    if len(set(spec.slices)) != len(spec.slices):
        raise TopologyError("slice domains must be unique")
    if len(spec.slices) > MAX_SLICES:
        raise TopologyError(f"at most {MAX_SLICES} slices supported")
    for domain in spec.slices:
        if not domain or "@" in domain or "/" in domain:
            raise TopologyError(f"bad slice domain {domain!r}")
    for rtype, ptype in spec.pair_types:
        if rtype not in VNF_ORDER:
            raise TopologyError(f"unknown requester type {rtype!r}")
        if ptype not in PROVIDER_TYPES:
            raise TopologyError(f"{ptype!r} cannot provide mesh APIs")
        if rtype == ptype:
            raise TopologyError(f"self-pair {rtype!r} not allowed")
    for (rtype, rslice), (ptype, pslice) in spec.inter_slice_edges:
        for domain in (rslice, pslice):
            if domain not in spec.slices:
                raise TopologyError(f"inter-slice edge references unknown slice {domain!r}")
        if rtype not in VNF_ORDER or ptype not in PROVIDER_TYPES or ptype == "nrf":
            raise TopologyError(f"bad inter-slice edge {rtype}@{rslice} -> {ptype}@{pslice}")
    for sub in spec.subscribers:
        if not sub.supi:
            raise TopologyError("subscriber without supi")
        try:
            bytes.fromhex(sub.key)
        except ValueError as e:
            raise TopologyError(f"subscriber {sub.supi}: key must be hex ({e})") from e


def plan_topology(spec: TopologySpec) -> DeploymentPlan:
    validate(spec)
    base = spec.base_port

    def block(start):
        if base == 0:
            return (0, 0, 0, 0, 0)
        return tuple(start + i for i in range(5))

    pods = []
    registry_ports = block(base + 10)
    pods.append(PodPlan(
        label="nrf", slice_domain="", vnf_type="nrf", ip="127.31.0.10",
        public_port=registry_ports[0], service_port=registry_ports[1],
        wscp_port=registry_ports[2], driver_port=registry_ports[3],
        admin_port=registry_ports[4],
    ))
    for index, domain in enumerate(spec.slices, start=1):
        pods.extend(plan_slice(spec, domain, index))

    return DeploymentPlan(
        spec=spec,
        store_host="127.31.0.1",
        store_port=base if base else 0,
        daemon_host="127.31.0.2",
        daemon_port=base + 1 if base else 0,
        pods=pods,
        pairs=plan_pairs(spec),
    )


def plan_slice(spec: TopologySpec, domain: str, index: int) -> list:
    """Pod plans for one slice at 1-based position `index`."""
    base = spec.base_port
    pods = []
    for j, vnf_type in enumerate(VNF_ORDER):
        if base == 0:
            ports = (0, 0, 0, 0, 0)
        else:
            start = base + index * PORTS_PER_SLICE + j * PORTS_PER_POD
            ports = tuple(start + i for i in range(5))
        pods.append(PodPlan(
            label=f"{domain}-{vnf_type}", slice_domain=domain, vnf_type=vnf_type,
            ip=f"127.31.{index}.{10 + j}",
            public_port=ports[0], service_port=ports[1], wscp_port=ports[2],
            driver_port=ports[3], admin_port=ports[4],
        ))
    return pods


def plan_pairs(spec: TopologySpec) -> list:
    pairs = []
    for domain in spec.slices:
        for rtype, ptype in spec.pair_types:
            pairs.append(PairPlan(
                requester=_pod_label(rtype, domain),
                provider=_pod_label(ptype, domain),
            ))
    for (rtype, rslice), (ptype, pslice) in spec.inter_slice_edges:
        pairs.append(PairPlan(
            requester=_pod_label(rtype, rslice),
            provider=_pod_label(ptype, pslice),
        ))
    return pairs


def extend_with_slice(spec: TopologySpec, domain: str) -> TopologySpec:
    if domain in spec.slices:
        raise TopologyError(f"slice {domain!r} already deployed")
    return replace(spec, slices=spec.slices + [domain])
