"""Per-VNF sidecars: grant/verify agent and inbound interception proxy."""

from .signing import NonceCache, parse_signature_header, verify_signature_header
from .wscp import WscpAgent, WscpServer
from .rscp import InterceptRecord, RscpProxy

__all__ = [
    "NonceCache",
    "parse_signature_header",
    "verify_signature_header",
    "WscpAgent",
    "WscpServer",
    "InterceptRecord",
    "RscpProxy",
]
