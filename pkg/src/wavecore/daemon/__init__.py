"""Key-holding agent: entity sessions, attestation exchange, proof service."""

from .service import DaemonService, ServiceError
from .server import DaemonServer
from .client import DaemonClient, DaemonClientError

__all__ = [
    "DaemonService",
    "ServiceError",
    "DaemonServer",
    "DaemonClient",
    "DaemonClientError",
]
