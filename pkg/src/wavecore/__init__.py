"""Desk-scale 5G core testbed with decentralized graph-based authorization.

Mock service-based-architecture VNFs (NRF, UDR, UDM, AUSF, AMF, SMF, UPF)
exchange HTTP requests that are intercepted by per-pod reverse proxies and
authorized against a delegation graph of signed attestations, backed by a
Merkle-logged object store and a key-holding daemon.
"""

__version__ = "0.1.0"
