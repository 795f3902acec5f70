"""``tierkreis-worker serve``: launch namespaces behind the worker protocol.

Namespaces are given as ``module:attribute`` (the attribute being a
Namespace), or by the bundled shorthand names ``mock``, ``optimizer``, and
``python_nodes``.
"""

from __future__ import annotations

import argparse
import importlib
import os
import sys

from .registry import Namespace, Worker
from .server import start_worker_server

BUNDLED = {
    "mock": "tierkreis_worker.workers.mock:nsp",
    "optimizer": "tierkreis_worker.workers.optimizer:nsp",
    "python_nodes": "tierkreis_worker.workers.python_nodes:nsp",
}


def load_namespace(spec: str) -> Namespace:
    spec = BUNDLED.get(spec, spec)
    if ":" not in spec:
        raise SystemExit(f"namespace spec must be module:attribute, got {spec!r}")
    module_name, _, attr = spec.partition(":")
    module = importlib.import_module(module_name)
    nsp = getattr(module, attr)
    if not isinstance(nsp, Namespace):
        raise SystemExit(f"{spec} is not a Namespace")
    return nsp


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="tierkreis-worker", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("serve", help="serve one or more namespaces")
    sp.add_argument("namespaces", nargs="+",
                    help="module:attribute specs or bundled names "
                         f"({', '.join(sorted(BUNDLED))})")
    sp.add_argument("--bind", default=None, metavar="HOST:PORT")
    sp.add_argument("--name", default="worker")
    sp.add_argument("--token", default=None)
    args = parser.parse_args(argv)

    bind = args.bind or os.environ.get("TIERKREIS_BIND") or "127.0.0.1:0"
    token = args.token or os.environ.get("TIERKREIS_TOKEN")
    namespaces = [load_namespace(s) for s in args.namespaces]
    start_worker_server(Worker(), args.name, namespaces, bind=bind, token=token)
    return 0


if __name__ == "__main__":
    sys.exit(main())
