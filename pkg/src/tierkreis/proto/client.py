"""HTTP clients for the worker and runtime surfaces.

Connection-phase failures are retried with exponential backoff; a request
that may already have executed a function is retried only when the worker
declares that function idempotent.
"""

from __future__ import annotations

import time
from typing import Optional

import requests

from ..graph import Graph
from ..serialize import (canonical_bytes, graph_to_json, load_json,
                         value_from_json, value_to_json)
from ..signatures import FunctionDecl, SignatureIndex
from ..values import Value
from .wire import RunContext, signature_from_json

RETRY_BACKOFF = (0.1, 0.2, 0.4)


class TransportError(Exception):
    """Endpoint unreachable after retries, or a malformed response."""

    def __init__(self, endpoint: str, message: str):
        self.endpoint = endpoint
        super().__init__(f"{endpoint}: {message}")


class WireError(Exception):
    """Structured error returned by the remote side."""

    def __init__(self, status: int, kind: str, message: str, locations=None):
        self.status = status
        self.kind = kind
        self.locations = locations or []
        super().__init__(f"[{status}] {kind}: {message}")


def _decode_error(resp: requests.Response) -> WireError:
    try:
        doc = resp.json()
        err = doc["error"]
        return WireError(resp.status_code, err.get("kind", "Error"),
                         err.get("message", ""), err.get("locations"))
    except Exception:
        return WireError(resp.status_code, "Error", resp.text[:500])


class WorkerClient:
    """Client for anything speaking the worker interface (workers and
    runtimes alike)."""

    def __init__(self, base_url: str, token: Optional[str] = None,
                 timeout: float = 300.0):
        self.base_url = base_url.rstrip("/")
        self.token = token
        self.timeout = timeout
        self._session = requests.Session()

    def _headers(self) -> dict:
        h = {"Content-Type": "application/json"}
        if self.token:
            h["Authorization"] = f"Bearer {self.token}"
        return h

    def _request(self, method: str, path: str, body: Optional[dict] = None,
                 retry_always: bool = False):
        url = f"{self.base_url}{path}"
        data = canonical_bytes(body) if body is not None else None
        last: Optional[Exception] = None
        attempts = 1 + (len(RETRY_BACKOFF) if retry_always else 0)
        for i in range(attempts):
            try:
                resp = self._session.request(method, url, data=data,
                                             headers=self._headers(),
                                             timeout=self.timeout)
            except requests.exceptions.ConnectionError as e:
                last = e
                if i < attempts - 1:
                    time.sleep(RETRY_BACKOFF[i])
                    continue
                raise TransportError(self.base_url, f"connection failed: {e}") from None
            except requests.exceptions.Timeout:
                raise TransportError(self.base_url, f"timed out after {self.timeout}s") from None
            if resp.status_code >= 400:
                raise _decode_error(resp)
            return load_json(resp.content)
        raise TransportError(self.base_url, f"connection failed: {last}")

    # -- worker surface -----------------------------------------------------

    def get_signature(self) -> dict:
        return self._request("GET", "/v1/signature", retry_always=True)

    def run_function(self, name: str, inputs: dict[str, Value], ctx: RunContext,
                     idempotent: bool = False) -> dict[str, Value]:
        ns, _, fname = name.partition("/")
        doc = self._request(
            "POST", f"/v1/functions/{ns}/{fname}:run",
            {"inputs": {k: value_to_json(v) for k, v in inputs.items()},
             "context": ctx.to_json()},
            retry_always=idempotent)
        if not isinstance(doc, dict) or not isinstance(doc.get("outputs"), dict):
            raise TransportError(self.base_url, "run response missing 'outputs'")
        return {k: value_from_json(v, f"/outputs/{k}")
                for k, v in doc["outputs"].items()}

    def remote_index(self, make_ctx) -> SignatureIndex:
        """Fetch this endpoint's signature as dispatchable declarations.

        ``make_ctx()`` supplies the RunContext attached to each call (the
        runtime rewrites the callback URL to itself at every hop).
        """
        decls = {}
        for name, scheme, idem in signature_from_json(self.get_signature()):
            def impl(inputs: dict[str, Value], _name=name, _idem=idem) -> dict[str, Value]:
                return self.run_function(_name, inputs, make_ctx(), idempotent=_idem)

            decls[name] = FunctionDecl(name, scheme, impl, endpoint=self.base_url,
                                       idempotent=idem)
        return SignatureIndex(decls)


class RuntimeClient(WorkerClient):
    """Adds the runtime-only surface: job submission and lifecycle."""

    def submit(self, graph: Graph, inputs: dict[str, Value],
               options: Optional[dict] = None) -> str:
        doc = self._request("POST", "/v1/jobs",
                            {"graph": graph_to_json(graph),
                             "inputs": {k: value_to_json(v) for k, v in inputs.items()},
                             "options": options or {}})
        if not isinstance(doc, dict) or "id" not in doc:
            raise TransportError(self.base_url, "submit response missing 'id'")
        return doc["id"]

    def status(self, job_id: str) -> dict:
        return self._request("GET", f"/v1/jobs/{job_id}", retry_always=True)

    def await_done(self, job_id: str, poll: float = 0.1,
                   timeout: Optional[float] = None) -> dict:
        """Poll until the job reaches a terminal status."""
        deadline = None if timeout is None else time.monotonic() + timeout
        while True:
            record = self.status(job_id)
            status = record.get("status", {})
            if any(k in status for k in ("done", "failed", "cancelled")):
                return record
            if deadline is not None and time.monotonic() > deadline:
                raise TransportError(self.base_url, f"job {job_id} not done in {timeout}s")
            time.sleep(poll)

    def outputs_of(self, record: dict) -> dict[str, Value]:
        status = record.get("status", {})
        if "done" not in status:
            raise WireError(500, "JobNotDone", f"status: {sorted(status)}")
        return {k: value_from_json(v, f"/status/done/outputs/{k}")
                for k, v in status["done"]["outputs"].items()}

    def cancel(self, job_id: str) -> None:
        self._request("POST", f"/v1/jobs/{job_id}:cancel")

    def checkpoint(self, job_id: str) -> bytes:
        doc = self._request("GET", f"/v1/jobs/{job_id}/checkpoint", retry_always=True)
        return canonical_bytes(doc)

    def resume(self, checkpoint: bytes | str,
               graphs: Optional[dict[str, Graph]] = None) -> str:
        body = {"checkpoint": load_json(checkpoint)}
        if graphs:
            body["graphs"] = {h: graph_to_json(g) for h, g in graphs.items()}
        doc = self._request("POST", "/v1/jobs:resume", body)
        if not isinstance(doc, dict) or "id" not in doc:
            raise TransportError(self.base_url, "resume response missing 'id'")
        return doc["id"]


def callback_run_graph(ctx: RunContext, graph: Graph,
                       inputs: dict[str, Value]) -> dict[str, Value]:
    """Worker-side helper: run a graph on the runtime that invoked us."""
    client = RuntimeClient(ctx.callback, token=ctx.token)
    job_id = client.submit(graph, inputs)
    record = client.await_done(job_id)
    return client.outputs_of(record)
