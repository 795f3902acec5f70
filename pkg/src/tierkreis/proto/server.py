"""The runtime service: signature aggregation over child workers, request
forwarding (trees of runtimes), and the job lifecycle endpoints.

Endpoints:
  GET  /v1/signature
  POST /v1/functions/{ns}/{fname}:run
  POST /v1/jobs
  GET  /v1/jobs/{id}
  POST /v1/jobs/{id}:cancel
  GET  /v1/jobs/{id}/checkpoint
  POST /v1/jobs:resume

A runtime's own signature includes everything its children provide, so a
runtime can serve as a worker for a parent runtime; requests for a child's
function are forwarded with the callback URL rewritten to this runtime.
The ``builtin`` namespace is always served locally (every runtime has one,
so child builtins are deduplicated rather than treated as collisions).
"""

from __future__ import annotations

import contextvars
import threading
import uuid
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional

from ..builtins import HostFnError, builtin_index
from ..executor import (Cancelled, ExecError, InputMismatch, Job, RunOptions,
                        prepare, restore)
from ..graph import Graph, InvalidGraph
from ..serialize import (DecodeError, canonical_bytes, graph_from_json,
                         load_json, value_from_json, value_to_json)
from ..signatures import FunctionDecl, SignatureClash, SignatureIndex
from ..typesys import TypeCheckFailure
from ..values import GraphValue, Value, VariantValue, kind_name
from .client import TransportError, WireError, WorkerClient
from .wire import RunContext, error_body, signature_to_json

current_job_id: contextvars.ContextVar[str] = contextvars.ContextVar(
    "tierkreis_job_id", default="-")


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 0  # 0 picks a free port
    workers: list[str] = field(default_factory=list)
    token: Optional[str] = None
    include_mocks: bool = False
    extra_decls: list[FunctionDecl] = field(default_factory=list)
    advertise: Optional[str] = None
    default_max_concurrency: int = 4
    max_loop_iters: Optional[int] = None


@dataclass
class _JobEntry:
    job: Job
    thread: threading.Thread


class RuntimeServer:
    def __init__(self, config: ServerConfig):
        self.config = config
        self._jobs: dict[str, _JobEntry] = {}
        self._jobs_lock = threading.Lock()
        self._httpd: Optional[ThreadingHTTPServer] = None

        local = builtin_index()
        if config.include_mocks:
            from ..mocknodes import mock_index

            local = mock_index()
        for decl in config.extra_decls:
            local = local.merged_with(SignatureIndex({decl.name: decl}),
                                      other_source="extra declaration")
        self.local_names = set(local.decls)
        index = local
        for url in config.workers:
            client = WorkerClient(url, token=config.token)
            child = client.remote_index(self._make_ctx)
            child = SignatureIndex({n: d for n, d in child.decls.items()
                                    if not n.startswith("builtin/")})
            index = index.merged_with(child, other_source=url)
        self.index = index

    # -- lifecycle -----------------------------------------------------------

    def start(self) -> "RuntimeServer":
        handler = _make_handler(self)
        self._httpd = ThreadingHTTPServer((self.config.host, self.config.port), handler)
        self._httpd.daemon_threads = True
        threading.Thread(target=self._httpd.serve_forever, daemon=True).start()
        return self

    def serve_forever(self) -> None:
        handler = _make_handler(self)
        self._httpd = ThreadingHTTPServer((self.config.host, self.config.port), handler)
        self._httpd.daemon_threads = True
        self._httpd.serve_forever()

    def shutdown(self) -> None:
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()

    @property
    def port(self) -> int:
        return self._httpd.server_address[1] if self._httpd else self.config.port

    @property
    def url(self) -> str:
        return self.config.advertise or f"http://{self.config.host}:{self.port}"

    def _make_ctx(self) -> RunContext:
        return RunContext(self.url, current_job_id.get(), self.config.token)

    # -- function routing ------------------------------------------------------

    def run_function(self, name: str, inputs: dict[str, Value],
                     ctx: RunContext) -> dict[str, Value]:
        """Execute or forward one function call."""
        decl = self.index.lookup(name)
        if decl is None:
            raise WireError(404, "UnknownFunction", f"no worker provides {name!r}")
        if decl.executor_handled:
            return self._run_control(name, inputs)
        return decl.impl(inputs)  # local host fn, or forwarding closure

    def _run_control(self, name: str, inputs: dict[str, Value]) -> dict[str, Value]:
        opts = RunOptions(max_concurrency=self.config.default_max_concurrency,
                          max_loop_iters=self.config.max_loop_iters)
        if name == "builtin/eval":
            thunk = inputs.get("thunk")
            if not isinstance(thunk, GraphValue):
                raise HostFnError("FunctionFailed", "eval needs a graph-valued 'thunk'")
            args = {k: v for k, v in inputs.items() if k != "thunk"}
            return Job(prepare(thunk.graph, args, self.index), opts).run()
        if name == "builtin/loop":
            body = inputs.get("body")
            if not isinstance(body, GraphValue):
                raise HostFnError("FunctionFailed", "loop needs a graph-valued 'body'")
            value = inputs["value"]
            iteration = 0
            while True:
                if (self.config.max_loop_iters is not None
                        and iteration >= self.config.max_loop_iters):
                    raise ExecError(f"loop exceeded {self.config.max_loop_iters} iterations")
                out = Job(prepare(body.graph, {"value": value}, self.index), opts).run()
                result = out.get("value")
                if not isinstance(result, VariantValue):
                    raise HostFnError("FunctionFailed",
                                      f"loop body returned {kind_name(result)}")
                if result.tag == "continue":
                    value = result.value
                    iteration += 1
                    continue
                if result.tag == "break":
                    return {"value": result.value}
                raise HostFnError("FunctionFailed", f"unexpected loop tag {result.tag!r}")
        raise HostFnError("FunctionFailed", f"{name} is not executable via run_function")

    # -- jobs -------------------------------------------------------------------

    def submit(self, graph: Graph, inputs: dict[str, Value], options: dict) -> str:
        plan = prepare(graph, inputs, self.index)  # rejects before any job exists
        opts = RunOptions(
            max_concurrency=int(options.get("max_concurrency",
                                            self.config.default_max_concurrency)),
            max_loop_iters=options.get("max_loop_iters", self.config.max_loop_iters))
        job = Job(plan, opts)
        return self._launch(job)

    def resume_job(self, checkpoint: bytes, graphs: Optional[dict[str, Graph]]) -> str:
        opts = RunOptions(max_concurrency=self.config.default_max_concurrency,
                          max_loop_iters=self.config.max_loop_iters)
        job = restore(checkpoint, self.index, graphs, opts)
        return self._launch(job)

    def _launch(self, job: Job) -> str:
        job_id = str(uuid.uuid4())

        def run() -> None:
            current_job_id.set(job_id)
            try:
                job.run()
            except Exception:
                pass  # recorded on job.state

        thread = threading.Thread(target=run, daemon=True)
        with self._jobs_lock:
            self._jobs[job_id] = _JobEntry(job, thread)
        thread.start()
        return job_id

    def job(self, job_id: str) -> _JobEntry:
        with self._jobs_lock:
            entry = self._jobs.get(job_id)
        if entry is None:
            raise WireError(404, "UnknownJob", f"no job {job_id!r}")
        return entry

    def job_record(self, job_id: str) -> dict:
        entry = self.job(job_id)
        state = entry.job.state
        if state.status == "done":
            status = {"done": {"outputs": {k: value_to_json(v)
                                           for k, v in state.outputs.items()}}}
        elif state.status == "failed":
            e = state.error
            status = {"failed": {"error": error_body(
                getattr(e, "kind", type(e).__name__), str(e),
                getattr(e, "locations", []))["error"]}}
        elif state.status == "cancelled":
            status = {"cancelled": {}}
        else:
            status = {"running": {}}
        return {"id": job_id, "status": status}


# -- HTTP plumbing ---------------------------------------------------------------

def _status_for(e: Exception) -> tuple[int, dict]:
    if isinstance(e, WireError):
        return e.status, error_body(e.kind, str(e), e.locations)
    if isinstance(e, TypeCheckFailure):
        return 422, error_body("TypeError", "graph does not type-check",
                               [str(v) for v in e.violations])
    if isinstance(e, (InvalidGraph,)):
        return 422, error_body("InvalidGraph", str(e))
    if isinstance(e, InputMismatch):
        return 422, error_body(e.kind, str(e))
    if isinstance(e, DecodeError):
        return 400, error_body("DecodeError", str(e))
    if isinstance(e, HostFnError):
        return 500, error_body(e.kind, e.message)
    if isinstance(e, Cancelled):
        return 409, error_body(e.kind, str(e))
    if isinstance(e, ExecError):
        return 500, error_body(e.kind, str(e), e.locations)
    if isinstance(e, TransportError):
        return 502, error_body("ChildUnreachable", str(e))
    return 500, error_body("InternalError", f"{type(e).__name__}: {e}")


def _make_handler(server: RuntimeServer):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # quiet
            pass

        def _send(self, status: int, doc: dict) -> None:
            body = canonical_bytes(doc)
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _body(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length) if length else b"{}"
            doc = load_json(raw)
            if not isinstance(doc, dict):
                raise DecodeError("/", "expected a JSON object")
            return doc

        def _authorized(self) -> bool:
            token = server.config.token
            if not token:
                return True
            return self.headers.get("Authorization") == f"Bearer {token}"

        def _route(self, method: str) -> None:
            try:
                if not self._authorized():
                    self._send(403, error_body("Forbidden", "missing or bad token"))
                    return
                path = self.path.split("?", 1)[0]
                parts = [p for p in path.split("/") if p]
                if method == "GET" and path == "/v1/signature":
                    self._send(200, signature_to_json(server.index))
                elif (method == "POST" and len(parts) == 4 and parts[0] == "v1"
                      and parts[1] == "functions" and parts[3].endswith(":run")):
                    ns, fname = parts[2], parts[3][: -len(":run")]
                    doc = self._body()
                    if not isinstance(doc.get("inputs"), dict):
                        raise DecodeError("/inputs", "expected an object of values")
                    inputs = {k: value_from_json(v, f"/inputs/{k}")
                              for k, v in doc["inputs"].items()}
                    ctx = RunContext.from_json(doc.get("context") or
                                               {"callback": server.url, "job": "-"})
                    current_job_id.set(ctx.job)
                    outputs = server.run_function(f"{ns}/{fname}", inputs, ctx)
                    self._send(200, {"outputs": {k: value_to_json(v)
                                                 for k, v in outputs.items()}})
                elif method == "POST" and path == "/v1/jobs":
                    doc = self._body()
                    if "graph" not in doc:
                        raise DecodeError("/graph", "missing")
                    graph = graph_from_json(doc["graph"], "/graph")
                    inputs = {k: value_from_json(v, f"/inputs/{k}")
                              for k, v in (doc.get("inputs") or {}).items()}
                    options = doc.get("options") or {}
                    if not isinstance(options, dict):
                        raise DecodeError("/options", "expected an object")
                    self._send(200, {"id": server.submit(graph, inputs, options)})
                elif method == "POST" and path == "/v1/jobs:resume":
                    doc = self._body()
                    if "checkpoint" not in doc:
                        raise DecodeError("/checkpoint", "missing")
                    graphs = None
                    if doc.get("graphs"):
                        graphs = {h: graph_from_json(g, f"/graphs/{h}")
                                  for h, g in doc["graphs"].items()}
                    job_id = server.resume_job(canonical_bytes(doc["checkpoint"]), graphs)
                    self._send(200, {"id": job_id})
                elif method == "GET" and len(parts) == 3 and parts[:2] == ["v1", "jobs"]:
                    self._send(200, server.job_record(parts[2]))
                elif (method == "POST" and len(parts) == 3 and parts[:2] == ["v1", "jobs"]
                      and parts[2].endswith(":cancel")):
                    job_id = parts[2][: -len(":cancel")]
                    server.job(job_id).job.cancel()
                    self._send(200, {"id": job_id})
                elif (method == "GET" and len(parts) == 4 and parts[:2] == ["v1", "jobs"]
                      and parts[3] == "checkpoint"):
                    snapshot = server.job(parts[2]).job.checkpoint()
                    self._send(200, load_json(snapshot))
                else:
                    self._send(404, error_body("NotFound", f"no route {method} {path}"))
            except Exception as e:  # all responses are structured errors
                status, doc = _status_for(e)
                try:
                    self._send(status, doc)
                except Exception:
                    pass

        def do_GET(self):
            self._route("GET")

        def do_POST(self):
            self._route("POST")

    return Handler
