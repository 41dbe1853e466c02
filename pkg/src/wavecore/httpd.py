"""Threaded HTTP service plumbing shared by every server in the package.

A ``Router`` maps ``METHOD /path/{param}`` patterns to handler callables.
Handlers receive a :class:`Request` and return one of:

* ``dict`` — serialized as a 200 JSON response,
* ``(status, dict)`` — JSON response with an explicit status,
* :class:`Response` — raw bytes with caller-controlled headers.

Raising :class:`HttpError` produces a ``{"code": ..., "reason": ...}`` JSON
error body.  Servers run on ``ThreadingHTTPServer`` with HTTP/1.1 keep-alive.

A server constructed with ``gate_header`` + ``gate_value`` refuses any
request that does not carry exactly that header value by closing the TCP
connection before a single response byte is written; the peer observes a
connection reset rather than an HTTP status.  The expected value is created
in-process and shared only with the component fronting this listener, so it
never crosses the network in configuration.
"""

import json
import sys
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qsl, urlsplit

from . import protocol


class HttpError(Exception):
    def __init__(self, status: int, code: str, reason: str = ""):
        super().__init__(f"{status} {code} {reason}".strip())
        self.status = status
        self.code = code
        self.reason = reason


@dataclass
class Request:
    method: str
    path: str
    raw_target: str
    params: dict
    query: dict
    headers: dict
    body: bytes
    client_ip: str
    client_port: int

    def json(self) -> dict:
        if not self.body:
            raise HttpError(400, "bad-json", "empty body")
        try:
            value = json.loads(self.body)
        except ValueError as e:
            raise HttpError(400, "bad-json", str(e)) from e
        if not isinstance(value, dict):
            raise HttpError(400, "bad-json", "expected a JSON object")
        return value


@dataclass
class Response:
    status: int = 200
    body: bytes = b""
    content_type: str = "application/octet-stream"
    headers: dict = field(default_factory=dict)


class Router:
    """Method + path-pattern dispatch with ``{name}`` placeholders."""

    def __init__(self):
        self._routes = []
        self._fallback = None

    def add(self, method: str, pattern: str, handler) -> None:
        segments = tuple(pattern.strip("/").split("/")) if pattern.strip("/") else ()
        self._routes.append((method.upper(), segments, handler))

    def fallback(self, handler) -> None:
        """Handler for anything no explicit route matches (proxy catch-all)."""
        self._fallback = handler

    def resolve(self, method: str, path: str):
        segments = tuple(path.strip("/").split("/")) if path.strip("/") else ()
        path_matched = False
        for verb, pattern, handler in self._routes:
            params = _match(pattern, segments)
            if params is None:
                continue
            path_matched = True
            if verb == method:
                return handler, params
        if self._fallback is not None:
            return self._fallback, {}
        if path_matched:
            raise HttpError(405, "method-not-allowed", f"{method} {path}")
        raise HttpError(404, "not-found", path)


def _match(pattern, segments):
    if len(pattern) != len(segments):
        return None
    params = {}
    for pat, seg in zip(pattern, segments):
        if pat.startswith("{") and pat.endswith("}"):
            if not seg:
                return None
            params[pat[1:-1]] = seg
        elif pat != seg:
            return None
    return params


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "wavecore"
    sys_version = ""
    timeout = 60
    # small JSON responses over keep-alive connections otherwise stall on
    # the Nagle/delayed-ACK interaction, which dwarfs the times under test
    disable_nagle_algorithm = True

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _read_body(self) -> bytes:
        if self.headers.get("Transfer-Encoding"):
            raise HttpError(400, "chunked-not-supported")
        length = int(self.headers.get("Content-Length") or 0)
        if length > self.server.max_body:
            raise HttpError(413, "body-too-large", f"{length} bytes")
        return self.rfile.read(length) if length else b""

    def _dispatch(self):
        server = self.server
        if server.gate_header and self.headers.get(server.gate_header) != server.gate_value:
            # refuse before any response byte leaves the socket
            self.close_connection = True
            return
        try:
            split = urlsplit(self.path)
            body = self._read_body()
            handler, params = server.router.resolve(self.command, split.path)
            request = Request(
                method=self.command,
                path=split.path,
                raw_target=self.path,
                params=params,
                query=dict(parse_qsl(split.query)),
                headers={k: v for k, v in self.headers.items()},
                body=body,
                client_ip=self.client_address[0],
                client_port=self.client_address[1],
            )
            result = handler(request)
        except HttpError as e:
            self._send_json(e.status, {"code": e.code, "reason": e.reason})
            if e.status == 413:
                self.close_connection = True
            return
        except Exception as e:  # handler bug: keep the server alive
            self._send_json(500, {"code": "internal-error", "reason": repr(e)})
            return
        if isinstance(result, Response):
            self._send_raw(result)
        elif isinstance(result, tuple):
            status, payload = result
            self._send_json(status, payload)
        else:
            self._send_json(200, result)

    def _send_json(self, status: int, payload) -> None:
        data = json.dumps(payload).encode()
        self._send_raw(Response(status, data, "application/json"))

    def _send_raw(self, response: Response) -> None:
        try:
            self.send_response(response.status)
            self.send_header("Content-Type", response.content_type)
            self.send_header("Content-Length", str(len(response.body)))
            for name, value in response.headers.items():
                self.send_header(name, value)
            self.end_headers()
            if response.body:
                self.wfile.write(response.body)
        except (BrokenPipeError, ConnectionResetError):
            self.close_connection = True

    do_GET = _dispatch
    do_POST = _dispatch
    do_PUT = _dispatch
    do_PATCH = _dispatch
    do_DELETE = _dispatch
    do_HEAD = _dispatch


class JsonHttpServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, host, port, router, gate_header=None, gate_value=None,
                 max_body=protocol.MAX_PROXY_BODY):
        self.router = router
        self.gate_header = gate_header
        self.gate_value = gate_value
        self.max_body = max_body
        super().__init__((host, port), _Handler)

    def handle_error(self, request, client_address):
        # clients dropping pooled keep-alive connections mid-read is routine
        # during teardown; only real handler failures deserve a traceback
        exc = sys.exc_info()[1]
        if isinstance(exc, (ConnectionResetError, BrokenPipeError, TimeoutError)):
            return
        super().handle_error(request, client_address)

    @property
    def bound_port(self) -> int:
        return self.server_address[1]


def start_server(host, port, router, gate_header=None, gate_value=None,
                 max_body=protocol.MAX_PROXY_BODY) -> JsonHttpServer:
    server = JsonHttpServer(host, port, router, gate_header, gate_value, max_body)
    # short poll so shutdown() returns promptly (deployments stop dozens
    # of listeners in sequence)
    thread = threading.Thread(target=lambda: server.serve_forever(poll_interval=0.05),
                              daemon=True,
                              name=f"httpd-{host}:{server.bound_port}")
    thread.start()
    server._thread = thread
    return server


def stop_server(server: JsonHttpServer) -> None:
    server.shutdown()
    server.server_close()
    thread = getattr(server, "_thread", None)
    if thread is not None:
        thread.join(timeout=5)
