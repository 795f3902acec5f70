"""The ``tk`` command: validate/typecheck graphs, render DOT, run locally,
serve a runtime, and drive jobs on a remote runtime.

stdout always carries a single JSON document for machine consumption;
diagnostics go to stderr. Exit codes: 0 ok, 1 user/type error (including an
exceeded loop-iteration cap), 2 transport error, 3 execution error.
"""

from __future__ import annotations

import argparse
import os
import re
import sys
from typing import Optional

from .builtins import builtin_index
from .dot import to_dot
from .executor import (Cancelled, ExecError, InputMismatch, Job, MaxIterations,
                       RunOptions, checkpoint_bytes, prepare)
from .graph import Graph, InvalidGraph
from .serialize import (DecodeError, canonical_bytes, deserialize_graph,
                        deserialize_value, row_to_json, type_to_json,
                        value_to_json)
from .signatures import FunctionDecl, SignatureIndex
from .typesys import TypeCheckFailure
from .values import BoolValue, FloatValue, IntValue, StrValue, Value

_INT_RE = re.compile(r"[+-]?\d+\Z")
_FLOAT_RE = re.compile(r"[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?\Z")


class CliError(Exception):
    def __init__(self, code: int, doc: dict):
        self.code = code
        self.doc = doc
        super().__init__(str(doc))


def _print(doc: dict) -> None:
    sys.stdout.write(canonical_bytes(doc).decode("utf-8") + "\n")
    sys.stdout.flush()


def _load_graph(path: str) -> Graph:
    try:
        with open(path, "rb") as fh:
            return deserialize_graph(fh.read())
    except OSError as e:
        raise CliError(1, {"error": {"kind": "IO", "message": str(e)}})
    except DecodeError as e:
        raise CliError(1, {"error": {"kind": "DecodeError", "message": str(e)}})


def parse_input_literal(text: str) -> Value:
    """``@file.tkv.json`` loads a value file; bare literals parse by syntax
    (Int, Float, Bool, then Str)."""
    if text.startswith("@"):
        try:
            with open(text[1:], "rb") as fh:
                return deserialize_value(fh.read())
        except OSError as e:
            raise CliError(1, {"error": {"kind": "IO", "message": str(e)}})
        except DecodeError as e:
            raise CliError(1, {"error": {"kind": "DecodeError", "message": str(e)}})
    if text in ("true", "false"):
        return BoolValue(text == "true")
    if _INT_RE.match(text):
        return IntValue(int(text))
    if _FLOAT_RE.match(text) and not _INT_RE.match(text):
        return FloatValue(float(text))
    return StrValue(text)


def _parse_inputs(pairs: list[str]) -> dict[str, Value]:
    out: dict[str, Value] = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise CliError(1, {"error": {"kind": "BadArgument",
                                         "message": f"--input wants port=value, got {pair!r}"}})
        port, _, text = pair.partition("=")
        out[port] = parse_input_literal(text)
    return out


def _index_for(signature: Optional[str], mocks: bool) -> SignatureIndex:
    if signature and signature != "builtin":
        from .proto.client import WorkerClient
        from .proto.wire import RunContext

        client = WorkerClient(signature, token=os.environ.get("TIERKREIS_TOKEN"))
        return client.remote_index(lambda: RunContext(signature, "-"))
    if mocks:
        from .mocknodes import mock_index

        return mock_index()
    return builtin_index()


def _violations_doc(violations) -> dict:
    return {"errors": [{
        "kind": v.kind, "loc": str(v.loc), "expected": v.expected,
        "actual": v.actual, "message": v.message} for v in violations]}


# -- subcommands ------------------------------------------------------------

def cmd_check(args) -> int:
    g = _load_graph(args.graph)
    index = _index_for(args.signature, args.mocks)
    from .typesys import infer_graph

    try:
        result = infer_graph(g, index)
    except InvalidGraph as e:
        _print({"errors": [str(err) for err in e.errors]})
        return 1
    if not result.ok:
        _print(_violations_doc(result.errors))
        return 1
    _print({
        "inputs": row_to_json(result.inputs),
        "outputs": row_to_json(result.outputs),
        "edges": [{"src": list(e.src), "dst": list(e.dst), "type": type_to_json(e.ty)}
                  for e in result.graph.edges],
    })
    return 0


def cmd_run(args) -> int:
    g = _load_graph(args.graph)
    index = _index_for(args.signature, args.mocks)
    inputs = _parse_inputs(args.input)

    ckpt_path = args.checkpoint_out

    def boundary_hook(job, frame):
        if ckpt_path:
            with open(ckpt_path, "wb") as fh:
                fh.write(checkpoint_bytes(job.state))

    options = RunOptions(max_concurrency=args.jobs,
                         max_loop_iters=args.max_loop_iters,
                         on_loop_boundary=boundary_hook if ckpt_path else None)
    try:
        job = Job(prepare(g, inputs, index), options)
        outputs = job.run()
    except (TypeCheckFailure,) as e:
        _print(_violations_doc(e.violations))
        return 1
    except (InvalidGraph, InputMismatch) as e:
        _print({"error": {"kind": getattr(e, "kind", "InvalidGraph"), "message": str(e)}})
        return 1
    except MaxIterations as e:
        _print({"error": {"kind": e.kind, "message": str(e)}})
        return 1
    except ExecError as e:
        _print({"error": {"kind": e.kind, "message": str(e), "locations": e.locations}})
        return 3
    if ckpt_path:
        with open(ckpt_path, "wb") as fh:
            fh.write(checkpoint_bytes(job.state))
    _print({k: value_to_json(v) for k, v in outputs.items()})
    return 0


def cmd_viz(args) -> int:
    g = _load_graph(args.graph)
    if args.types:
        from .typesys import infer_graph

        result = infer_graph(g, _index_for(args.signature, args.mocks))
        if not result.ok:
            _print(_violations_doc(result.errors))
            return 1
        g = result.graph
    text = to_dot(g, annotated=args.types)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(text)
    _print({"written": args.out})
    return 0


def cmd_serve(args) -> int:
    from .proto.server import RuntimeServer, ServerConfig

    bind = args.bind or os.environ.get("TIERKREIS_BIND") or "127.0.0.1:8100"
    host, _, port = bind.partition(":")
    workers = list(args.worker or [])
    env_workers = os.environ.get("TIERKREIS_WORKERS")
    if env_workers:
        workers.extend(u for u in env_workers.split(",") if u)
    token = args.token or os.environ.get("TIERKREIS_TOKEN")
    server = RuntimeServer(ServerConfig(
        host=host or "127.0.0.1", port=int(port or 0), workers=workers,
        token=token, include_mocks=args.mocks,
        max_loop_iters=args.max_loop_iters))
    server.start()
    _print({"serving": server.url})
    try:
        import threading

        threading.Event().wait()
    except KeyboardInterrupt:
        server.shutdown()
    return 0


def _client(url: str):
    from .proto.client import RuntimeClient

    return RuntimeClient(url, token=os.environ.get("TIERKREIS_TOKEN"))


def cmd_submit(args) -> int:
    g = _load_graph(args.graph)
    client = _client(args.url)
    options = {}
    if args.max_loop_iters is not None:
        options["max_loop_iters"] = args.max_loop_iters
    job_id = client.submit(g, _parse_inputs(args.input), options)
    if not getattr(args, "await_done", False):
        _print({"id": job_id})
        return 0
    return _await_and_print(client, job_id)


def _await_and_print(client, job_id: str) -> int:
    record = client.await_done(job_id)
    status = record["status"]
    if "done" in status:
        _print(status["done"]["outputs"])
        return 0
    _print(record)
    return 3


def cmd_job(args) -> int:
    client = _client(args.url)
    if args.cancel:
        client.cancel(args.id)
        _print({"id": args.id, "cancelled": True})
        return 0
    if args.checkpoint:
        data = client.checkpoint(args.id)
        with open(args.checkpoint, "wb") as fh:
            fh.write(data)
        _print({"written": args.checkpoint})
        return 0
    if getattr(args, "await_done", False):
        return _await_and_print(client, args.id)
    _print(client.status(args.id))
    return 0


def cmd_resume(args) -> int:
    client = _client(args.url)
    try:
        with open(args.checkpoint, "rb") as fh:
            data = fh.read()
    except OSError as e:
        raise CliError(1, {"error": {"kind": "IO", "message": str(e)}})
    job_id = client.resume(data)
    if getattr(args, "await_done", False):
        return _await_and_print(client, job_id)
    _print({"id": job_id})
    return 0


def cmd_signature(args) -> int:
    from .proto.wire import signature_to_json

    if args.url == "builtin":
        _print(signature_to_json(_index_for(None, args.mocks)))
        return 0
    _print(_client(args.url).get_signature())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tk", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common_sig(sp):
        sp.add_argument("--signature", default=None,
                        help="'builtin' (default) or a runtime/worker URL")
        sp.add_argument("--mocks", action="store_true",
                        help="include the in-process mock/optimizer namespaces")

    sp = sub.add_parser("check", help="type-check a graph and print edge annotations")
    sp.add_argument("graph")
    common_sig(sp)
    sp.set_defaults(fn=cmd_check)

    sp = sub.add_parser("run", help="run a graph locally, in process")
    sp.add_argument("graph")
    sp.add_argument("--input", action="append", metavar="PORT=VALUE")
    sp.add_argument("--max-loop-iters", type=int, default=None)
    sp.add_argument("--jobs", type=int, default=4, help="max concurrent node fires")
    sp.add_argument("--checkpoint-out", default=None, metavar="FILE")
    common_sig(sp)
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("viz", help="export a graph as Graphviz DOT")
    sp.add_argument("graph")
    sp.add_argument("--types", action="store_true", help="annotate edges with types")
    sp.add_argument("-o", "--out", required=True)
    common_sig(sp)
    sp.set_defaults(fn=cmd_viz)

    sp = sub.add_parser("serve", help="serve a runtime over HTTP")
    sp.add_argument("--bind", default=None, metavar="HOST:PORT")
    sp.add_argument("--worker", action="append", metavar="URL")
    sp.add_argument("--token", default=None)
    sp.add_argument("--max-loop-iters", type=int, default=None)
    sp.add_argument("--mocks", action="store_true")
    sp.set_defaults(fn=cmd_serve)

    sp = sub.add_parser("submit", help="submit a graph to a remote runtime")
    sp.add_argument("url")
    sp.add_argument("graph")
    sp.add_argument("--input", action="append", metavar="PORT=VALUE")
    sp.add_argument("--max-loop-iters", type=int, default=None)
    sp.add_argument("--await", dest="await_done", action="store_true")
    sp.set_defaults(fn=cmd_submit)

    sp = sub.add_parser("job", help="inspect or control a job")
    sp.add_argument("url")
    sp.add_argument("id")
    sp.add_argument("--await", dest="await_done", action="store_true")
    sp.add_argument("--cancel", action="store_true")
    sp.add_argument("--checkpoint", default=None, metavar="FILE")
    sp.set_defaults(fn=cmd_job)

    sp = sub.add_parser("resume", help="resume a job from a checkpoint file")
    sp.add_argument("url")
    sp.add_argument("checkpoint")
    sp.add_argument("--await", dest="await_done", action="store_true")
    sp.set_defaults(fn=cmd_resume)

    sp = sub.add_parser("signature", help="list the functions a runtime provides")
    sp.add_argument("url", help="'builtin' for the local builtin worker, or a URL")
    sp.add_argument("--mocks", action="store_true")
    sp.set_defaults(fn=cmd_signature)

    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CliError as e:
        _print(e.doc)
        return e.code
    except TypeCheckFailure as e:
        _print(_violations_doc(e.violations))
        return 1
    except DecodeError as e:
        _print({"error": {"kind": "DecodeError", "message": str(e)}})
        return 1
    except Cancelled as e:
        _print({"error": {"kind": e.kind, "message": str(e)}})
        return 3
    except Exception as e:
        from .proto.client import TransportError, WireError

        if isinstance(e, TransportError):
            _print({"error": {"kind": "Transport", "message": str(e)}})
            return 2
        if isinstance(e, WireError):
            _print({"error": {"kind": e.kind, "message": str(e),
                              "locations": e.locations}})
            return 1 if e.status in (400, 404, 409, 422) else 3
        raise


if __name__ == "__main__":
    sys.exit(main())
