"""HTTP client helpers: keep-alive pooling, source binding, readiness polls."""

import http.client
import json
import socket
import threading
import time
from dataclasses import dataclass


class TransportError(Exception):
    """Connection-level failure (refused, reset, timed out)."""


_STALE = (
    http.client.RemoteDisconnected,
    http.client.BadStatusLine,
    http.client.CannotSendRequest,
    ConnectionResetError,
    ConnectionAbortedError,
    BrokenPipeError,
)


@dataclass
class ClientResponse:
    status: int
    headers: dict
    body: bytes

    def json(self):
        return json.loads(self.body) if self.body else None


class HttpClient:
    """Keep-alive HTTP client pooling one connection per (thread, host, port).

    When ``source_ip`` is given every connection binds that local address,
    so servers see it as the TCP peer.
    """

    def __init__(self, source_ip: str | None = None, timeout: float = 10.0):
        self.source_ip = source_ip
        self.timeout = timeout
        self._local = threading.local()
        self._all = []
        self._lock = threading.Lock()

    def _pool(self) -> dict:
        pool = getattr(self._local, "pool", None)
        if pool is None:
            pool = self._local.pool = {}
        return pool

    def _connect(self, host: str, port: int) -> http.client.HTTPConnection:
        source = (self.source_ip, 0) if self.source_ip else None
        conn = http.client.HTTPConnection(
            host, port, timeout=self.timeout, source_address=source
        )
        try:
            conn.connect()
            # header and body go out as separate small writes; without this
            # they stall on the Nagle/delayed-ACK interaction
            conn.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        except OSError as e:
            raise TransportError(f"connect {host}:{port}: {e}") from e
        with self._lock:
            self._all.append(conn)
        return conn

    def request(self, method: str, host: str, port: int, path: str,
                body: bytes = b"", headers: dict | None = None) -> ClientResponse:
        pool = self._pool()
        key = (host, port)
        conn = pool.get(key)
        fresh = conn is None
        if fresh:
            conn = pool[key] = self._connect(host, port)
        try:
            return self._roundtrip(conn, method, path, body, headers)
        except _STALE as e:
            conn.close()
            pool.pop(key, None)
            if fresh:
                raise TransportError(f"{method} {host}:{port}{path}: {e}") from e
            # the pooled connection idled out; retry once on a new one
            conn = pool[key] = self._connect(host, port)
            try:
                return self._roundtrip(conn, method, path, body, headers)
            except _STALE as e2:
                conn.close()
                pool.pop(key, None)
                raise TransportError(f"{method} {host}:{port}{path}: {e2}") from e2
        except OSError as e:
            conn.close()
            pool.pop(key, None)
            raise TransportError(f"{method} {host}:{port}{path}: {e}") from e

    def _roundtrip(self, conn, method, path, body, headers) -> ClientResponse:
        conn.request(method, path, body=body or None, headers=headers or {})
        response = conn.getresponse()
        data = response.read()
        return ClientResponse(
            status=response.status,
            headers={k.lower(): v for k, v in response.getheaders()},
            body=data,
        )

    def request_json(self, method: str, host: str, port: int, path: str,
                     payload=None, headers: dict | None = None) -> ClientResponse:
        body = b""
        merged = dict(headers or {})
        if payload is not None:
            body = json.dumps(payload).encode()
            merged.setdefault("Content-Type", "application/json")
        return self.request(method, host, port, path, body, merged)

    def close(self) -> None:
        with self._lock:
            conns, self._all = self._all, []
        for conn in conns:
            try:
                conn.close()
            except OSError:
                pass


def wait_for_health(host: str, port: int, path: str = "/healthz",
                    timeout: float = 15.0, headers: dict | None = None) -> None:
    """Poll ``GET path`` until it returns 200 or the deadline passes."""
    deadline = time.monotonic() + timeout
    last = "no attempt"
    while time.monotonic() < deadline:
        conn = http.client.HTTPConnection(host, port, timeout=2.0)
        try:
            conn.request("GET", path, headers=headers or {})
            if conn.getresponse().status == 200:
                return
            last = "non-200"
        except OSError as e:
            last = str(e)
        finally:
            conn.close()
        time.sleep(0.05)
    raise TimeoutError(f"{host}:{port}{path} not healthy after {timeout}s ({last})")


def free_port(host: str = "127.0.0.1") -> int:
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as sock:
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        sock.bind((host, 0))
        return sock.getsockname()[1]
