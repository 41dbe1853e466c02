"""Registry function: instance registration, subscriptions, discovery.

Registered profiles age out of discovery when three heartbeat intervals
pass without a PATCH; re-registering or heartbeating makes them fresh
again. Subscriptions are bookkeeping only (no callback delivery).
"""

from __future__ import annotations

import threading
import time

from ..httpd import HttpError, Router
from .base import VnfBase

DEFAULT_HEARTBEAT_INTERVAL_S = 10.0
STALE_AFTER_INTERVALS = 3


class NrfVnf(VnfBase):
    vnf_type = "nrf"

    def __init__(self, config, clock=time.time):
        self._instances: dict[str, dict] = {}
        self._subscriptions: dict[str, dict] = {}
        self._sub_counter = 0
        self._lock = threading.Lock()
        super().__init__(config, clock)

    def service_routes(self, router: Router) -> None:
        router.add("PUT", "/nnrf-nfm/v1/nf-instances/{nf_id}", self._register)
        router.add("PATCH", "/nnrf-nfm/v1/nf-instances/{nf_id}", self._heartbeat)
        router.add("GET", "/nnrf-nfm/v1/nf-instances/{nf_id}", self._get_instance)
        router.add("POST", "/nnrf-nfm/v1/subscriptions", self._subscribe)
        router.add("DELETE", "/nnrf-nfm/v1/subscriptions/{sub_id}", self._unsubscribe)
        router.add("GET", "/nnrf-disc/v1/nf-instances", self._discover)

    # ------------------------------------------------------------ helpers

    def _with_status(self, instance: dict) -> dict:
        last_seen = max(instance["registered_at_us"], instance["last_heartbeat_us"])
        horizon_us = STALE_AFTER_INTERVALS * instance["heartbeat_interval_s"] * 1_000_000
        status = "STALE" if self.now_us() - last_seen > horizon_us else "REGISTERED"
        return {**instance, "status": status}

    # ----------------------------------------------------------- handlers

    def _register(self, request):
        profile = request.json()
        nf_id = request.params["nf_id"]
        with self._lock:
            previous = self._instances.get(nf_id, {})
            created = not previous
            self._instances[nf_id] = {
                "nf_id": nf_id,
                "nf_type": str(profile.get("nf_type", "")),
                "slice_domain": str(profile.get("slice_domain", "")),
                "address": str(profile.get("address", "")),
                "heartbeat_interval_s": float(
                    profile.get("heartbeat_interval_s", DEFAULT_HEARTBEAT_INTERVAL_S)
                ),
                "status": "REGISTERED",
                "heartbeats": previous.get("heartbeats", 0),
                "last_heartbeat_us": previous.get("last_heartbeat_us", 0),
                "registered_at_us": self.now_us(),
            }
        return (201 if created else 200), self._instances[nf_id]

    def _heartbeat(self, request):
        nf_id = request.params["nf_id"]
        with self._lock:
            instance = self._instances.get(nf_id)
            if instance is None:
                raise HttpError(404, "unknown-instance", nf_id)
            instance["heartbeats"] += 1
            instance["last_heartbeat_us"] = self.now_us()
            return self._with_status(instance)

    def _get_instance(self, request):
        instance = self._instances.get(request.params["nf_id"])
        if instance is None:
            raise HttpError(404, "unknown-instance", request.params["nf_id"])
        return self._with_status(instance)

    def _subscribe(self, request):
        body = request.json()
        with self._lock:
            self._sub_counter += 1
            sub_id = f"sub-{self._sub_counter}"
            self._subscriptions[sub_id] = {
                "subscription_id": sub_id,
                "subscriber": str(body.get("subscriber", "")),
                "nf_type_watch": str(body.get("nf_type_watch", "")),
                "created_at_us": self.now_us(),
            }
        return 201, self._subscriptions[sub_id]

    def _unsubscribe(self, request):
        removed = self._subscriptions.pop(request.params["sub_id"], None)
        if removed is None:
            raise HttpError(404, "unknown-subscription", request.params["sub_id"])
        return {"removed": removed["subscription_id"]}

    def _discover(self, request):
        wanted_type = request.query.get("target-nf-type")
        wanted_slice = request.query.get("slice-domain")
        with self._lock:
            candidates = [self._with_status(i) for i in self._instances.values()]
        matches = [
            inst for inst in candidates
            if inst["status"] == "REGISTERED"
            and (wanted_type is None or inst["nf_type"] == wanted_type)
            and (wanted_slice is None or inst["slice_domain"] == wanted_slice)
        ]
        return {"instances": matches}

    def state(self) -> dict:
        with self._lock:
            return {
                "instances": {k: self._with_status(v) for k, v in self._instances.items()},
                "subscriptions": {k: dict(v) for k, v in self._subscriptions.items()},
            }
