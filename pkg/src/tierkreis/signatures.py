"""Function declarations and the signature index the runtime dispatches on."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .typesys.exprs import TypeScheme
from .values import Value

HostFn = Callable[[dict[str, Value]], dict[str, Value]]


class SignatureClash(Exception):
    """Two providers advertise the same qualified function name."""


@dataclass
class FunctionDecl:
    """One callable unit: qualified name, polymorphic scheme, how to run it.

    ``impl`` is None for executor-handled controls (eval, loop); ``endpoint``
    names the remote worker serving the function, when not local.
    """

    name: str
    scheme: TypeScheme
    impl: Optional[HostFn] = None
    endpoint: Optional[str] = None
    idempotent: bool = False

    @property
    def executor_handled(self) -> bool:
        return self.impl is None and self.endpoint is None


@dataclass
class SignatureIndex:
    """Immutable qualified-name -> declaration mapping; shareable."""

    decls: dict[str, FunctionDecl] = field(default_factory=dict)

    def lookup(self, name: str) -> Optional[FunctionDecl]:
        return self.decls.get(name)

    def lookup_scheme(self, name: str) -> Optional[TypeScheme]:
        d = self.decls.get(name)
        return d.scheme if d else None

    def names(self) -> list[str]:
        return sorted(self.decls)

    def namespaces(self) -> dict[str, dict[str, TypeScheme]]:
        out: dict[str, dict[str, TypeScheme]] = {}
        for name, d in sorted(self.decls.items()):
            ns, _, fname = name.partition("/")
            out.setdefault(ns, {})[fname] = d.scheme
        return out

    def merged_with(self, other: "SignatureIndex", *, other_source: str = "?",
                    self_source: str = "local") -> "SignatureIndex":
        """Disjoint union; a collision is a configuration error naming both
        providers."""
        decls = dict(self.decls)
        for name, d in other.decls.items():
            if name in decls:
                raise SignatureClash(
                    f"function {name!r} provided by both {self_source} and {other_source}")
            decls[name] = d
        return SignatureIndex(decls)


def index_of(decls: list[FunctionDecl]) -> SignatureIndex:
    out: dict[str, FunctionDecl] = {}
    for d in decls:
        if d.name in out:
            raise SignatureClash(f"duplicate declaration of {d.name!r}")
        out[d.name] = d
    return SignatureIndex(out)
