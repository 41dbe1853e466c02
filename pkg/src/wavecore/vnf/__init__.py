"""Mock core network functions served behind the interception sidecars."""

from .base import MeshError, TargetRef, VnfBase, VnfConfig
from .nrf import NrfVnf
from .udr import UdrVnf
from .udm import UdmVnf
from .ausf import AusfVnf
from .amf import AmfVnf
from .smf import SmfVnf
from .upf import UpfVnf
from .gnbsim import UeSim, UeSimError

VNF_CLASSES = {
    "nrf": NrfVnf,
    "udr": UdrVnf,
    "udm": UdmVnf,
    "ausf": AusfVnf,
    "amf": AmfVnf,
    "smf": SmfVnf,
    "upf": UpfVnf,
}

__all__ = [
    "MeshError",
    "TargetRef",
    "VnfBase",
    "VnfConfig",
    "NrfVnf",
    "UdrVnf",
    "UdmVnf",
    "AusfVnf",
    "AmfVnf",
    "SmfVnf",
    "UpfVnf",
    "UeSim",
    "UeSimError",
    "VNF_CLASSES",
]
