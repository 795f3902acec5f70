"""Namespaces and workers: the function registry behind the wire surface."""

from __future__ import annotations

import asyncio
import dataclasses
import inspect
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

from .schema import derive_scheme, output_is_record
from .wire import RowT, Scheme, WireError, decode_value, encode_value


class RegistrationError(TypeError):
    pass


@dataclass
class FunctionEntry:
    name: str
    fn: Callable
    scheme: Scheme
    idempotent: bool = False
    serialized: bool = False  # force one-at-a-time execution
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    record_output: bool = False

    def run(self, input_docs: dict) -> dict:
        """Decode inputs per the scheme, call the function, encode outputs."""
        in_row = dict(self.scheme.inputs.entries)
        unknown = sorted(set(input_docs) - set(in_row))
        if unknown:
            raise WireError("/inputs", f"unknown port {unknown[0]!r} "
                                       f"(takes {sorted(in_row)})")
        missing = sorted(set(in_row) - set(input_docs))
        if missing:
            raise WireError("/inputs", f"missing port {missing[0]!r}")
        kwargs = {name: decode_value(doc, in_row[name], f"/inputs/{name}")
                  for name, doc in input_docs.items()}

        def invoke():
            if inspect.iscoroutinefunction(self.fn):
                return asyncio.run(self.fn(**kwargs))
            return self.fn(**kwargs)

        if self.serialized:
            with self._lock:
                result = invoke()
        else:
            result = invoke()

        out_row = dict(self.scheme.outputs.entries)
        if self.record_output:
            if not dataclasses.is_dataclass(result):
                raise WireError("/outputs", "function declared a record return")
            values = {f.name: getattr(result, f.name)
                      for f in dataclasses.fields(result)}
        else:
            values = {"value": result}
        return {port: encode_value(values[port], out_row[port], f"/outputs/{port}")
                for port in out_row}


class Namespace:
    """Decorator-based function registry under one namespace name."""

    def __init__(self, name: str):
        self.name = name
        self.functions: dict[str, FunctionEntry] = {}

    def function(self, idempotent: bool = False, serialized: bool = False,
                 name: Optional[str] = None):
        def wrap(fn):
            fname = name or fn.__name__
            if fname in self.functions:
                raise RegistrationError(f"{self.name}/{fname} registered twice")
            scheme = derive_scheme(fn)  # rejects unannotated callables
            self.functions[fname] = FunctionEntry(
                f"{self.name}/{fname}", fn, scheme, idempotent=idempotent,
                serialized=serialized, record_output=output_is_record(fn))
            return fn

        return wrap


class Worker:
    """A set of namespaces served behind the worker wire interface."""

    def __init__(self, namespaces: Optional[list[Namespace]] = None):
        self.namespaces: dict[str, Namespace] = {}
        for nsp in namespaces or []:
            self.add(nsp)

    def add(self, nsp: Namespace) -> None:
        if nsp.name in self.namespaces:
            raise RegistrationError(f"namespace {nsp.name!r} added twice")
        self.namespaces[nsp.name] = nsp

    def entry(self, ns: str, fname: str) -> Optional[FunctionEntry]:
        nsp = self.namespaces.get(ns)
        return nsp.functions.get(fname) if nsp else None

    def signature_doc(self) -> dict:
        from .wire import scheme_to_json

        namespaces: dict[str, dict] = {}
        meta: dict[str, dict] = {}
        for ns in sorted(self.namespaces):
            for fname, entry in sorted(self.namespaces[ns].functions.items()):
                namespaces.setdefault(ns, {})[fname] = scheme_to_json(entry.scheme)
                if entry.idempotent:
                    meta[entry.name] = {"idempotent": True}
        doc: dict = {"namespaces": namespaces}
        if meta:
            doc["meta"] = meta
        return doc
