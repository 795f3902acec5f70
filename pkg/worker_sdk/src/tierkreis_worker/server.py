"""The worker's HTTP surface: signature listing and function execution.

Mirrors the runtime protocol exactly:
  GET  /v1/signature
  POST /v1/functions/{ns}/{fname}:run
    body {"inputs": {...}, "context": {"callback": url, "job": id, "token": s?}}
"""

from __future__ import annotations

import contextvars
import json
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional

from .registry import Namespace, Worker
from .wire import WireError, canon


@dataclass(frozen=True)
class RunContext:
    callback: str
    job: str
    token: Optional[str] = None


current_context: contextvars.ContextVar[Optional[RunContext]] = \
    contextvars.ContextVar("tierkreis_worker_ctx", default=None)


class WorkerServer:
    def __init__(self, worker: Worker, name: str, host: str = "127.0.0.1",
                 port: int = 0, token: Optional[str] = None):
        self.worker = worker
        self.name = name
        self.token = token
        self._httpd = ThreadingHTTPServer((host, port), _handler_for(self))
        self._httpd.daemon_threads = True
        self._thread: Optional[threading.Thread] = None

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "WorkerServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self._httpd.serve_forever()

    def shutdown(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()


def start_worker_server(worker: Worker, name: str,
                        namespaces: Optional[list[Namespace]] = None,
                        bind: str = "127.0.0.1:0", token: Optional[str] = None,
                        block: bool = True) -> WorkerServer:
    """Register the namespaces on the worker and serve them.

    With ``block`` false the server runs on a background thread and the
    handle is returned (its ``url`` reports the bound address).
    """
    for nsp in namespaces or []:
        worker.add(nsp)
    host, _, port = bind.partition(":")
    server = WorkerServer(worker, name, host or "127.0.0.1", int(port or 0),
                          token=token)
    if block:
        print(json.dumps({"serving": server.url, "worker": name}), flush=True)
        server.serve_forever()
    return server.start()


def _handler_for(server: WorkerServer):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):
            pass

        def _send(self, status: int, doc: dict) -> None:
            body = canon(doc)
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _error(self, status: int, kind: str, message: str) -> None:
            self._send(status, {"error": {"kind": kind, "message": message,
                                          "locations": []}})

        def do_GET(self):
            if server.token and self.headers.get("Authorization") != f"Bearer {server.token}":
                self._error(403, "Forbidden", "missing or bad token")
                return
            if self.path.split("?")[0] == "/v1/signature":
                self._send(200, server.worker.signature_doc())
            else:
                self._error(404, "NotFound", self.path)

        def do_POST(self):
            if server.token and self.headers.get("Authorization") != f"Bearer {server.token}":
                self._error(403, "Forbidden", "missing or bad token")
                return
            parts = [p for p in self.path.split("?")[0].split("/") if p]
            if (len(parts) != 4 or parts[0] != "v1" or parts[1] != "functions"
                    or not parts[3].endswith(":run")):
                self._error(404, "NotFound", self.path)
                return
            ns, fname = parts[2], parts[3][: -len(":run")]
            entry = server.worker.entry(ns, fname)
            if entry is None:
                self._error(404, "UnknownFunction", f"no function {ns}/{fname}")
                return
            try:
                length = int(self.headers.get("Content-Length") or 0)
                doc = json.loads(self.rfile.read(length) or b"{}")
                inputs = doc.get("inputs")
                if not isinstance(inputs, dict):
                    raise WireError("/inputs", "expected an object of values")
                ctx_doc = doc.get("context") or {}
                current_context.set(RunContext(ctx_doc.get("callback", ""),
                                               ctx_doc.get("job", "-"),
                                               ctx_doc.get("token")))
                outputs = entry.run(inputs)
                self._send(200, {"outputs": outputs})
            except WireError as e:
                self._error(422, "FunctionFailed", str(e))
            except Exception as e:
                self._error(500, "FunctionFailed", f"{type(e).__name__}: {e}")

    return Handler
