"""Type expression syntax: ground constructors, rows, variables, schemes.

Rows are finite labelled lists of types with an optional variable tail; an
open row stands for "these labels plus whatever the tail resolves to". Type
variables and row variables share one id space (a scheme's quantifier list
tags each id with its kind).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Union


@dataclass(frozen=True)
class BoolType:
    pass


@dataclass(frozen=True)
class IntType:
    pass


@dataclass(frozen=True)
class FloatType:
    pass


@dataclass(frozen=True)
class StrType:
    pass


@dataclass(frozen=True)
class PairType:
    first: "TypeExpr"
    second: "TypeExpr"


@dataclass(frozen=True)
class VecType:
    item: "TypeExpr"


@dataclass(frozen=True)
class MapType:
    key: "TypeExpr"
    value: "TypeExpr"


@dataclass(frozen=True)
class StructType:
    row: "Row"


@dataclass(frozen=True)
class VariantType:
    row: "Row"


@dataclass(frozen=True)
class GraphType:
    inputs: "Row"
    outputs: "Row"


@dataclass(frozen=True)
class VarType:
    id: int


TypeExpr = Union[BoolType, IntType, FloatType, StrType, PairType, VecType,
                 MapType, StructType, VariantType, GraphType, VarType]

BOOL = BoolType()
INT = IntType()
FLOAT = FloatType()
STR = StrType()


@dataclass(frozen=True)
class Row:
    """Labelled types plus an optional row-variable tail (open row)."""

    entries: tuple[tuple[str, TypeExpr], ...]
    rest: Optional[int] = None  # row variable id; None means closed

    def __init__(self, entries: Mapping[str, TypeExpr] | Iterable[tuple[str, TypeExpr]] = (),
                 rest: Optional[int] = None) -> None:
        items = list(entries.items()) if isinstance(entries, Mapping) else list(entries)
        labels = [l for l, _ in items]
        if len(set(labels)) != len(labels):
            raise ValueError(f"row labels must be distinct: {labels}")
        items.sort(key=lambda lt: lt[0])
        object.__setattr__(self, "entries", tuple(items))
        object.__setattr__(self, "rest", rest)

    @staticmethod
    def closed(entries: Mapping[str, TypeExpr] | Iterable[tuple[str, TypeExpr]] = ()) -> "Row":
        return Row(entries, None)

    @staticmethod
    def open(entries: Mapping[str, TypeExpr] | Iterable[tuple[str, TypeExpr]], rest: int) -> "Row":
        return Row(entries, rest)

    @staticmethod
    def var(rest: int) -> "Row":
        return Row((), rest)

    def to_dict(self) -> dict[str, TypeExpr]:
        return dict(self.entries)

    def labels(self) -> list[str]:
        return [l for l, _ in self.entries]

    def is_closed(self) -> bool:
        return self.rest is None


@dataclass(frozen=True)
class SchemeLacks:
    row: int
    label: str


@dataclass(frozen=True)
class SchemePartition:
    a: Row
    b: Row
    whole: Row


SchemeConstraint = Union[SchemeLacks, SchemePartition]


@dataclass(frozen=True)
class TypeScheme:
    """Polymorphic node signature: quantified vars, row constraints, body."""

    quantified: tuple[tuple[str, int], ...]  # ("t"|"r", var id)
    constraints: tuple[SchemeConstraint, ...]
    inputs: Row
    outputs: Row

    def __init__(self, quantified: Iterable[tuple[str, int]] = (),
                 constraints: Iterable[SchemeConstraint] = (),
                 inputs: Row = Row(), outputs: Row = Row()) -> None:
        object.__setattr__(self, "quantified", tuple(quantified))
        object.__setattr__(self, "constraints", tuple(constraints))
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outputs", outputs)


def free_vars(term, acc: Optional[list[tuple[str, int]]] = None) -> list[tuple[str, int]]:
    """Free (kind, id) pairs in first-occurrence order.

    Accepts TypeExpr or Row. Occurrence order follows structure left to
    right, rows by sorted label then tail.
    """
    out: list[tuple[str, int]] = [] if acc is None else acc

    def add(kind: str, vid: int) -> None:
        if (kind, vid) not in out:
            out.append((kind, vid))

    def walk_t(t: TypeExpr) -> None:
        if isinstance(t, VarType):
            add("t", t.id)
        elif isinstance(t, PairType):
            walk_t(t.first)
            walk_t(t.second)
        elif isinstance(t, VecType):
            walk_t(t.item)
        elif isinstance(t, MapType):
            walk_t(t.key)
            walk_t(t.value)
        elif isinstance(t, StructType):
            walk_r(t.row)
        elif isinstance(t, VariantType):
            walk_r(t.row)
        elif isinstance(t, GraphType):
            walk_r(t.inputs)
            walk_r(t.outputs)

    def walk_r(r: Row) -> None:
        for _, t in r.entries:
            walk_t(t)
        if r.rest is not None:
            add("r", r.rest)

    if isinstance(term, Row):
        walk_r(term)
    else:
        walk_t(term)
    return out


def map_vars(term, tmap: Mapping[int, TypeExpr], rmap: Mapping[int, Row]):
    """Substitute variables structurally (no chasing; used for instantiation
    and renumbering). Row-tail substitution splices entries and tail."""

    def on_t(t: TypeExpr) -> TypeExpr:
        if isinstance(t, VarType):
            return tmap.get(t.id, t)
        if isinstance(t, PairType):
            return PairType(on_t(t.first), on_t(t.second))
        if isinstance(t, VecType):
            return VecType(on_t(t.item))
        if isinstance(t, MapType):
            return MapType(on_t(t.key), on_t(t.value))
        if isinstance(t, StructType):
            return StructType(on_r(t.row))
        if isinstance(t, VariantType):
            return VariantType(on_r(t.row))
        if isinstance(t, GraphType):
            return GraphType(on_r(t.inputs), on_r(t.outputs))
        return t

    def on_r(r: Row) -> Row:
        entries = {l: on_t(t) for l, t in r.entries}
        rest = r.rest
        if rest is not None and rest in rmap:
            tail = rmap[rest]
            for l, t in tail.entries:
                if l in entries:
                    raise ValueError(f"row splice duplicates label {l!r}")
                entries[l] = t
            rest = tail.rest
        return Row(entries, rest)

    return on_r(term) if isinstance(term, Row) else on_t(term)


def renumber_vars(terms: list, start: int = 0) -> tuple[list, dict[tuple[str, int], int]]:
    """Rename all free vars across ``terms`` to start, start+1, ... in
    first-use order. Returns (renamed terms, old->new id map)."""
    order: list[tuple[str, int]] = []
    for term in terms:
        free_vars(term, order)
    renaming = {kv: start + i for i, kv in enumerate(order)}
    tmap = {vid: VarType(new) for (k, vid), new in renaming.items() if k == "t"}
    rmap = {vid: Row.var(new) for (k, vid), new in renaming.items() if k == "r"}
    return [map_vars(t, tmap, rmap) for t in terms], renaming


def var_name(vid: int) -> str:
    return f"var{vid}"


def render_type(t: TypeExpr) -> str:
    if isinstance(t, BoolType):
        return "Bool"
    if isinstance(t, IntType):
        return "Int"
    if isinstance(t, FloatType):
        return "Float"
    if isinstance(t, StrType):
        return "Str"
    if isinstance(t, PairType):
        return f"Pair({render_type(t.first)}, {render_type(t.second)})"
    if isinstance(t, VecType):
        return f"Vec({render_type(t.item)})"
    if isinstance(t, MapType):
        return f"Map({render_type(t.key)}, {render_type(t.value)})"
    if isinstance(t, StructType):
        return f"Struct{render_row(t.row)}"
    if isinstance(t, VariantType):
        return f"Variant{render_row(t.row)}"
    if isinstance(t, GraphType):
        return f"Graph({render_row(t.inputs)} -> {render_row(t.outputs)})"
    if isinstance(t, VarType):
        return var_name(t.id)
    raise TypeError(f"not a type expression: {t!r}")


def render_row(r: Row) -> str:
    inner = ", ".join(f"{l}: {render_type(t)}" for l, t in r.entries)
    if r.rest is not None:
        inner = f"{inner} | {var_name(r.rest)}" if inner else var_name(r.rest)
    return f"({inner})"


def render_scheme(s: TypeScheme) -> str:
    parts = []
    if s.quantified:
        parts.append("forall " + ", ".join(var_name(v) for _, v in s.quantified) + ".")
    for c in s.constraints:
        if isinstance(c, SchemeLacks):
            parts.append(f"{c.label}/{var_name(c.row)}")
        else:
            parts.append(f"{render_row(c.a)} + {render_row(c.b)} ~ {render_row(c.whole)} =>")
    parts.append(f"{render_row(s.inputs)} -> {render_row(s.outputs)}")
    return " ".join(parts)
