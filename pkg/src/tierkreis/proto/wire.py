"""Wire documents shared by servers and clients: signatures, run contexts,
job records, and error bodies."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..serialize import DecodeError, scheme_from_json, scheme_to_json
from ..signatures import SignatureIndex
from ..typesys.exprs import TypeScheme


@dataclass(frozen=True)
class RunContext:
    """Attached to every run_function request: where the worker may call
    back to run graphs, under which job, with what authorization."""

    callback: str
    job: str
    token: Optional[str] = None

    def to_json(self) -> dict:
        doc = {"callback": self.callback, "job": self.job}
        if self.token is not None:
            doc["token"] = self.token
        return doc

    @staticmethod
    def from_json(doc, path: str = "/context") -> "RunContext":
        if not isinstance(doc, dict) or "callback" not in doc or "job" not in doc:
            raise DecodeError(path, "context needs 'callback' and 'job'")
        return RunContext(doc["callback"], doc["job"], doc.get("token"))


def signature_to_json(index: SignatureIndex) -> dict:
    """The signature document: namespaces of schemes, plus a meta section
    carrying per-function flags (currently idempotency)."""
    namespaces: dict[str, dict] = {}
    meta: dict[str, dict] = {}
    for name in index.names():
        decl = index.lookup(name)
        ns, _, fname = name.partition("/")
        namespaces.setdefault(ns, {})[fname] = scheme_to_json(decl.scheme)
        if decl.idempotent:
            meta[name] = {"idempotent": True}
    doc: dict = {"namespaces": namespaces}
    if meta:
        doc["meta"] = meta
    return doc


def signature_from_json(doc) -> list[tuple[str, TypeScheme, bool]]:
    """(qualified name, scheme, idempotent) triples from a signature doc."""
    if not isinstance(doc, dict) or not isinstance(doc.get("namespaces"), dict):
        raise DecodeError("/namespaces", "expected a namespaces object")
    meta = doc.get("meta") or {}
    out = []
    for ns, fns in sorted(doc["namespaces"].items()):
        if not isinstance(fns, dict):
            raise DecodeError(f"/namespaces/{ns}", "expected an object of schemes")
        for fname, sdoc in sorted(fns.items()):
            name = f"{ns}/{fname}"
            scheme = scheme_from_json(sdoc, f"/namespaces/{ns}/{fname}")
            idem = bool(isinstance(meta, dict)
                        and isinstance(meta.get(name), dict)
                        and meta[name].get("idempotent"))
            out.append((name, scheme, idem))
    return out


def error_body(kind: str, message: str, locations: Optional[list] = None) -> dict:
    return {"error": {"kind": kind, "message": message, "locations": locations or []}}
