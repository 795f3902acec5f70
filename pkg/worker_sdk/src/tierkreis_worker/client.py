"""Callback client: run graphs on the runtime that invoked this worker."""

from __future__ import annotations

import json
import time
import urllib.error
import urllib.request
from typing import Optional

from .server import RunContext, current_context
from .wire import GraphHandle, canon


class CallbackError(Exception):
    pass


def _request(url: str, token: Optional[str], body: Optional[dict] = None) -> dict:
    req = urllib.request.Request(url, method="POST" if body is not None else "GET")
    req.add_header("Content-Type", "application/json")
    if token:
        req.add_header("Authorization", f"Bearer {token}")
    data = canon(body) if body is not None else None
    try:
        with urllib.request.urlopen(req, data=data, timeout=300) as resp:
            return json.loads(resp.read())
    except urllib.error.HTTPError as e:
        try:
            err = json.loads(e.read())["error"]
            raise CallbackError(f"[{e.code}] {err.get('kind')}: {err.get('message')}")
        except (ValueError, KeyError):
            raise CallbackError(f"[{e.code}] {e.reason}") from None
    except urllib.error.URLError as e:
        raise CallbackError(f"cannot reach {url}: {e.reason}") from None


def callback_run_graph(graph: GraphHandle | dict, inputs: dict[str, dict],
                       ctx: Optional[RunContext] = None,
                       poll: float = 0.05) -> dict[str, dict]:
    """Submit a graph (and wire-encoded inputs) to the invoking runtime and
    wait for its outputs.

    Without an explicit ``ctx`` the context of the current request is used.
    """
    ctx = ctx or current_context.get()
    if ctx is None or not ctx.callback:
        raise CallbackError("no runtime context to call back into")
    gdoc = graph.doc if isinstance(graph, GraphHandle) else graph
    base = ctx.callback.rstrip("/")
    created = _request(f"{base}/v1/jobs", ctx.token,
                       {"graph": gdoc, "inputs": inputs, "options": {}})
    job_id = created["id"]
    while True:
        record = _request(f"{base}/v1/jobs/{job_id}", ctx.token)
        status = record.get("status", {})
        if "done" in status:
            return status["done"]["outputs"]
        if "failed" in status:
            err = status["failed"]["error"]
            raise CallbackError(f"{err.get('kind')}: {err.get('message')}")
        if "cancelled" in status:
            raise CallbackError("callback job was cancelled")
        time.sleep(poll)
