"""Unification: substitution store, occurs checks, and row rewriting.

Row unification follows the rewriting discipline for extensible records:
matching labels unify pointwise; a label present on one side only is pushed
into the other side's row variable, introducing a fresh tail that must lack
every label already consumed. Lacks sets live in the substitution and are
enforced on every row-variable binding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .exprs import (GraphType, MapType, PairType, Row, StructType, TypeExpr,
                    VariantType, VarType, VecType, render_row, render_type)


class VarSupply:
    """Monotonic fresh-variable ids, shared by type and row variables."""

    def __init__(self, start: int = 0) -> None:
        self._next = start

    def fresh(self) -> int:
        vid = self._next
        self._next += 1
        return vid

    def fresh_var(self) -> VarType:
        return VarType(self.fresh())

    def fresh_row(self) -> Row:
        return Row.var(self.fresh())


@dataclass
class UnifyFailure(Exception):
    """A single unsatisfiable obligation; callers attach the location."""

    kind: str  # Mismatch | OccursCheck | MissingLabel | DuplicateLabel | LacksViolation
    message: str
    expected: str = ""
    actual: str = ""

    def __str__(self) -> str:
        return f"{self.kind}: {self.message}"


@dataclass
class Substitution:
    """Bindings for type and row variables plus lacks obligations."""

    t_bind: dict[int, TypeExpr] = field(default_factory=dict)
    r_bind: dict[int, Row] = field(default_factory=dict)
    lacks: dict[int, set[str]] = field(default_factory=dict)

    def resolve(self, t: TypeExpr) -> TypeExpr:
        """Follow variable bindings to the representative (shallow)."""
        while isinstance(t, VarType) and t.id in self.t_bind:
            t = self.t_bind[t.id]
        return t

    def flatten_row(self, r: Row) -> tuple[dict[str, TypeExpr], int | None]:
        """Collect entries along the tail chain; tail is an unbound var or None.

        Entry types are left unresolved; only the row spine is chased.
        """
        entries: dict[str, TypeExpr] = {}
        rest = None
        cur: Row | None = r
        while cur is not None:
            for label, t in cur.entries:
                if label in entries:
                    raise UnifyFailure("DuplicateLabel",
                                       f"label {label!r} occurs twice along a row chain")
                entries[label] = t
            if cur.rest is not None and cur.rest in self.r_bind:
                cur = self.r_bind[cur.rest]
            else:
                rest = cur.rest
                cur = None
        return entries, rest

    def lacks_of(self, rvar: int) -> set[str]:
        return self.lacks.setdefault(rvar, set())

    def add_lacks(self, rvar: int, label: str) -> None:
        """Record that row var ``rvar`` must never gain ``label``."""
        entries, rest = self.flatten_row(Row.var(rvar))
        if label in entries:
            raise UnifyFailure("LacksViolation",
                               f"row already contains label {label!r} it must lack")
        if rest is not None:
            self.lacks_of(rest).add(label)

    def occurs(self, kind: str, vid: int, term) -> bool:
        """Does (kind, vid) occur in term, chasing bindings?"""
        seen: set[tuple[str, int]] = set()

        def on_t(t: TypeExpr) -> bool:
            t = self.resolve(t)
            if isinstance(t, VarType):
                return kind == "t" and t.id == vid
            if isinstance(t, PairType):
                return on_t(t.first) or on_t(t.second)
            if isinstance(t, VecType):
                return on_t(t.item)
            if isinstance(t, MapType):
                return on_t(t.key) or on_t(t.value)
            if isinstance(t, StructType):
                return on_r(t.row)
            if isinstance(t, VariantType):
                return on_r(t.row)
            if isinstance(t, GraphType):
                return on_r(t.inputs) or on_r(t.outputs)
            return False

        def on_r(r: Row) -> bool:
            entries, rest = self.flatten_row(r)
            if rest is not None:
                if kind == "r" and rest == vid:
                    return True
                if ("r", rest) in seen:
                    return False
                seen.add(("r", rest))
            return any(on_t(t) for t in entries.values())

        return on_r(term) if isinstance(term, Row) else on_t(term)

    def bind_type(self, vid: int, t: TypeExpr) -> None:
        t = self.resolve(t)
        if isinstance(t, VarType) and t.id == vid:
            return
        if self.occurs("t", vid, t):
            raise UnifyFailure("OccursCheck",
                               f"var{vid} occurs inside {render_type(self.apply(t))}")
        self.t_bind[vid] = t

    def bind_row(self, rvar: int, row: Row) -> None:
        """Bind a row variable, enforcing its lacks set and the occurs check."""
        entries, rest = self.flatten_row(row)
        if rest == rvar and not entries:
            return
        if self.occurs("r", rvar, row):
            raise UnifyFailure("OccursCheck",
                               f"row var{rvar} occurs inside {render_row(self.apply(row))}")
        forbidden = self.lacks_of(rvar)
        hit = sorted(forbidden & set(entries))
        if hit:
            raise UnifyFailure("LacksViolation",
                               f"row var{rvar} lacks {hit[0]!r} but is bound to a row containing it")
        if rest is not None:
            self.lacks_of(rest).update(forbidden)
        self.r_bind[rvar] = row

    def apply(self, term):
        """Deep-resolve a TypeExpr or Row; idempotent on the result."""
        if isinstance(term, Row):
            entries, rest = self.flatten_row(term)
            return Row({l: self.apply(t) for l, t in entries.items()}, rest)
        t = self.resolve(term)
        if isinstance(t, PairType):
            return PairType(self.apply(t.first), self.apply(t.second))
        if isinstance(t, VecType):
            return VecType(self.apply(t.item))
        if isinstance(t, MapType):
            return MapType(self.apply(t.key), self.apply(t.value))
        if isinstance(t, StructType):
            return StructType(self.apply(t.row))
        if isinstance(t, VariantType):
            return VariantType(self.apply(t.row))
        if isinstance(t, GraphType):
            return GraphType(self.apply(t.inputs), self.apply(t.outputs))
        return t


def unify(a: TypeExpr, b: TypeExpr, sub: Substitution, supply: VarSupply) -> None:
    """Extend ``sub`` to a most general unifier of ``a`` and ``b``.

    Raises UnifyFailure; on failure the substitution may hold partial
    progress (callers treat errors as poisoning the involved variables).
    """
    a = sub.resolve(a)
    b = sub.resolve(b)
    if a == b:
        return
    if isinstance(a, VarType):
        sub.bind_type(a.id, b)
        return
    if isinstance(b, VarType):
        sub.bind_type(b.id, a)
        return
    if type(a) is not type(b):
        raise UnifyFailure("Mismatch", "type constructors differ",
                           render_type(sub.apply(a)), render_type(sub.apply(b)))
    if isinstance(a, PairType) and isinstance(b, PairType):
        unify(a.first, b.first, sub, supply)
        unify(a.second, b.second, sub, supply)
    elif isinstance(a, VecType) and isinstance(b, VecType):
        unify(a.item, b.item, sub, supply)
    elif isinstance(a, MapType) and isinstance(b, MapType):
        unify(a.key, b.key, sub, supply)
        unify(a.value, b.value, sub, supply)
    elif isinstance(a, StructType) and isinstance(b, StructType):
        unify_rows(a.row, b.row, sub, supply)
    elif isinstance(a, VariantType) and isinstance(b, VariantType):
        unify_rows(a.row, b.row, sub, supply)
    elif isinstance(a, GraphType) and isinstance(b, GraphType):
        unify_rows(a.inputs, b.inputs, sub, supply)
        unify_rows(a.outputs, b.outputs, sub, supply)
    else:  # two different ground nullary constructors
        raise UnifyFailure("Mismatch", "types differ",
                           render_type(a), render_type(b))


def unify_rows(a: Row, b: Row, sub: Substitution, supply: VarSupply) -> None:
    """Unify two rows, rewriting open tails to absorb one-sided labels."""
    ea, ra = sub.flatten_row(a)
    eb, rb = sub.flatten_row(b)

    for label in sorted(set(ea) & set(eb)):
        unify(ea[label], eb[label], sub, supply)

    only_a = {l: t for l, t in ea.items() if l not in eb}
    only_b = {l: t for l, t in eb.items() if l not in ea}

    if not only_a and not only_b:
        if ra == rb:
            return
        if ra is None and rb is None:
            return
        if ra is None:
            sub.bind_row(rb, Row.closed({}))
        elif rb is None:
            sub.bind_row(ra, Row.closed({}))
        else:
            merged = sub.lacks_of(ra) | sub.lacks_of(rb)
            sub.lacks_of(rb).update(merged)
            sub.bind_row(ra, Row.var(rb))
        return

    if only_b and ra is None:
        missing = sorted(only_b)[0]
        raise UnifyFailure("MissingLabel", f"label {missing!r} absent from closed row",
                           render_row(sub.apply(a)), render_row(sub.apply(b)))
    if only_a and rb is None:
        missing = sorted(only_a)[0]
        raise UnifyFailure("MissingLabel", f"label {missing!r} absent from closed row",
                           render_row(sub.apply(b)), render_row(sub.apply(a)))
    if ra is not None and ra == rb:
        raise UnifyFailure("OccursCheck",
                           "rows with a shared tail differ in labels "
                           f"{sorted(set(only_a) | set(only_b))}")

    if ra is None:
        sub.bind_row(rb, Row.closed(only_a))  # only_b is empty here
    elif rb is None:
        sub.bind_row(ra, Row.closed(only_b))
    else:
        tail = supply.fresh()
        sub.lacks_of(tail).update(set(ea) | set(eb))
        sub.bind_row(ra, Row.open(only_b, tail))
        sub.bind_row(rb, Row.open(only_a, tail))


def hashable_type(t: TypeExpr, sub: Substitution | None = None) -> bool:
    """May values of ``t`` be map keys? Variables count as unknown-ok."""
    from .exprs import BoolType, IntType, StrType

    if sub is not None:
        t = sub.resolve(t)
    if isinstance(t, VarType):
        return True
    if isinstance(t, (BoolType, IntType, StrType)):
        return True
    if isinstance(t, PairType):
        return hashable_type(t.first, sub) and hashable_type(t.second, sub)
    if isinstance(t, VecType):
        return hashable_type(t.item, sub)
    if isinstance(t, VariantType):
        return all(hashable_type(x, sub) for _, x in t.row.entries)
    return False
