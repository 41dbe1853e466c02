"""Topology-driven deployment of slices, sidecars, daemon, and store."""

from .topology import (
    DEFAULT_PAIR_TYPES,
    DeploymentPlan,
    PairPlan,
    PodPlan,
    Subscriber,
    TopologyError,
    TopologySpec,
    load_topology,
    plan_topology,
    spec_from_dict,
)
from .pods import PodGroup, resolve_targets
from .deploy import ControlServer, Deployment, DeployError, ProcPod

__all__ = [
    "DEFAULT_PAIR_TYPES",
    "DeploymentPlan",
    "PairPlan",
    "PodPlan",
    "Subscriber",
    "TopologyError",
    "TopologySpec",
    "load_topology",
    "plan_topology",
    "spec_from_dict",
    "PodGroup",
    "resolve_targets",
    "ControlServer",
    "Deployment",
    "DeployError",
    "ProcPod",
]
