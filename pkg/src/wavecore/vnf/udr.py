"""Repository function: per-subscriber credentials and authentication state."""

from __future__ import annotations

import threading
import time

from ..httpd import HttpError, Router
from .base import VnfBase


class UdrVnf(VnfBase):
    vnf_type = "udr"

    def __init__(self, config, clock=time.time):
        self._subscribers: dict[str, dict] = {}
        self._lock = threading.Lock()
        super().__init__(config, clock)

    def service_routes(self, router: Router) -> None:
        router.add(
            "GET",
            "/nudr-dr/v1/subscription-data/{supi}/authentication-subscription",
            self._get_subscription,
        )
        router.add(
            "PATCH",
            "/nudr-dr/v1/subscription-data/{supi}/authentication-subscription",
            self._patch_subscription,
        )
        router.add(
            "GET",
            "/nudr-dr/v1/subscription-data/{supi}/authentication-status",
            self._get_status,
        )
        router.add(
            "PUT",
            "/nudr-dr/v1/subscription-data/{supi}/authentication-status",
            self._put_status,
        )

    def driver_routes(self, router: Router) -> None:
        router.add("POST", "/driver/subscribers", self._seed)

    # ----------------------------------------------------------- handlers

    def _subscriber(self, supi: str) -> dict:
        record = self._subscribers.get(supi)
        if record is None:
            raise HttpError(404, "unknown-supi", supi)
        return record

    def _get_subscription(self, request):
        record = self._subscriber(request.params["supi"])
        return {"supi": record["supi"], "key": record["key"], "sqn": record["sqn"]}

    def _patch_subscription(self, request):
        body = request.json()
        with self._lock:
            record = self._subscriber(request.params["supi"])
            record["sqn"] = int(body.get("sqn", record["sqn"] + 1))
        return {"supi": record["supi"], "sqn": record["sqn"]}

    def _get_status(self, request):
        record = self._subscriber(request.params["supi"])
        return {"supi": record["supi"], "auth_status": dict(record["auth_status"])}

    def _put_status(self, request):
        body = request.json()
        with self._lock:
            record = self._subscriber(request.params["supi"])
            record["auth_status"] = {
                "status": str(body.get("status", "")),
                "serving": str(body.get("serving", "")),
                "updated_at_us": self.now_us(),
            }
        return {"supi": record["supi"], "auth_status": dict(record["auth_status"])}

    def _seed(self, request):
        body = request.json()
        supi = str(body.get("supi", ""))
        key = str(body.get("key", ""))
        if not supi or not key:
            raise HttpError(400, "bad-subscriber", "supi and key required")
        try:
            bytes.fromhex(key)
        except ValueError as e:
            raise HttpError(400, "bad-subscriber", f"key must be hex: {e}") from e
        with self._lock:
            self._subscribers[supi] = {
                "supi": supi,
                "key": key,
                "sqn": int(body.get("sqn", 0)),
                "auth_status": {"status": "none"},
            }
        return 201, {"supi": supi}

    def state(self) -> dict:
        with self._lock:
            return {
                "subscribers": {
                    supi: {"sqn": r["sqn"], "auth_status": dict(r["auth_status"])}
                    for supi, r in self._subscribers.items()
                }
            }
