"""Whole-graph type inference.

Every node instantiates a polymorphic signature with fresh variables; every
edge contributes an equality between the type at its source port and its
destination port; higher-order builtins add lacks and partition obligations
over rows. Partition constraints are solved by a fixpoint queue: one is
dischargeable once two of its three rows are label-resolved (closed), and
constraints that stay deferred are either retained in the resulting scheme
(polymorphic graph) or reported as unsolved.

Failures poison the variables they touch; obligations over poisoned
variables are skipped so one mistake is reported once, with the remaining
independent constraints still checked.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Protocol

from ..graph import (BoxNode, ConstNode, Edge, FunctionNode, Graph, InputNode,
                     InvalidGraph, MatchNode, OutputNode, TagNode,
                     validate_graph)
from ..values import (BoolValue, FloatValue, GraphValue, IntValue, MapValue,
                      PairValue, StrValue, StructValue, Value, VariantValue,
                      VecValue)
from .exprs import (BOOL, FLOAT, INT, STR, GraphType, MapType, PairType, Row,
                    SchemeLacks, SchemePartition, StructType, TypeExpr,
                    TypeScheme, VariantType, VarType, VecType, free_vars,
                    map_vars, render_row, render_type, renumber_vars)
from .subst import (Substitution, UnifyFailure, VarSupply, hashable_type,
                    unify, unify_rows)


class SignatureLike(Protocol):
    def lookup_scheme(self, name: str) -> Optional[TypeScheme]: ...


@dataclass(frozen=True)
class Loc:
    """Where a type error points: a node, port, or edge, with the node-id
    path of enclosing boxes/graph constants for nested graphs."""

    node: Optional[int] = None
    port: Optional[str] = None
    edge: Optional[tuple[int, str, int, str]] = None
    path: tuple[int, ...] = ()
    value_path: str = ""

    def __str__(self) -> str:
        parts = [f"node {i}" for i in self.path]
        if self.edge is not None:
            s, sp, d, dp = self.edge
            parts.append(f"edge {s}.{sp} -> {d}.{dp}")
        elif self.node is not None:
            parts.append(f"node {self.node}" + (f" port {self.port!r}" if self.port else ""))
        if self.value_path:
            parts.append(f"value path {self.value_path!r}")
        return " / ".join(parts) if parts else "graph"


@dataclass(frozen=True)
class TypeViolation:
    kind: str  # Mismatch | OccursCheck | MissingLabel | DuplicateLabel |
    #            LacksViolation | UnsolvedPartition | UnknownFunction
    loc: Loc
    expected: str = ""
    actual: str = ""
    message: str = ""

    def __str__(self) -> str:
        s = f"{self.kind} at {self.loc}"
        if self.expected or self.actual:
            s += f": expected {self.expected}, actual {self.actual}"
        if self.message:
            s += f" ({self.message})"
        return s


class TypeCheckFailure(Exception):
    def __init__(self, violations: list[TypeViolation]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations) or "type check failed")


@dataclass
class Lacks:
    row: int
    label: str
    loc: Loc


@dataclass
class Partition:
    """Obligation that ``whole`` is the disjoint union of ``a`` and ``b``."""

    a: Row
    b: Row
    whole: Row
    loc: Loc


@dataclass
class Instantiated:
    inputs: Row
    outputs: Row
    lacks: list[Lacks]
    partitions: list[Partition]


def instantiate(scheme: TypeScheme, supply: VarSupply, loc: Loc = Loc()) -> Instantiated:
    """Replace quantified variables with fresh ones, consistently across the
    body and the scheme's constraints."""
    tmap: dict[int, TypeExpr] = {}
    rmap: dict[int, Row] = {}
    renames: dict[int, int] = {}
    for kind, vid in scheme.quantified:
        nid = supply.fresh()
        renames[vid] = nid
        if kind == "t":
            tmap[vid] = VarType(nid)
        else:
            rmap[vid] = Row.var(nid)
    inputs = map_vars(scheme.inputs, tmap, rmap)
    outputs = map_vars(scheme.outputs, tmap, rmap)
    lacks: list[Lacks] = []
    partitions: list[Partition] = []
    for c in scheme.constraints:
        if isinstance(c, SchemeLacks):
            lacks.append(Lacks(renames.get(c.row, c.row), c.label, loc))
        elif isinstance(c, SchemePartition):
            partitions.append(Partition(
                map_vars(c.a, tmap, rmap), map_vars(c.b, tmap, rmap),
                map_vars(c.whole, tmap, rmap), loc))
    return Instantiated(inputs, outputs, lacks, partitions)


def solve_partition(p: Partition, sub: Substitution, supply: VarSupply) -> bool:
    """Try to discharge a partition. True if solved, False to defer.

    Solvable once two of the three rows are label-resolved: the third is the
    set difference (or disjoint union). Raises UnifyFailure on overlap or a
    part escaping the whole.
    """
    ea, ra = sub.flatten_row(p.a)
    eb, rb = sub.flatten_row(p.b)
    ew, rw = sub.flatten_row(p.whole)

    overlap = sorted(set(ea) & set(eb))
    if overlap:
        raise UnifyFailure("DuplicateLabel",
                           f"label {overlap[0]!r} on both sides of a disjoint union")

    if ra is None and rb is None:
        union = dict(ea)
        union.update(eb)
        unify_rows(p.whole, Row.closed(union), sub, supply)
        return True
    if rw is None and ra is None:
        bad = sorted(set(ea) - set(ew))
        if bad:
            raise UnifyFailure("MissingLabel",
                               f"label {bad[0]!r} not present in the row being split",
                               render_row(sub.apply(p.whole)), render_row(sub.apply(p.a)))
        for label in sorted(ea):
            unify(ea[label], ew[label], sub, supply)
        remainder = {l: t for l, t in ew.items() if l not in ea}
        unify_rows(p.b, Row.closed(remainder), sub, supply)
        return True
    if rw is None and rb is None:
        bad = sorted(set(eb) - set(ew))
        if bad:
            raise UnifyFailure("MissingLabel",
                               f"label {bad[0]!r} not present in the row being split",
                               render_row(sub.apply(p.whole)), render_row(sub.apply(p.b)))
        for label in sorted(eb):
            unify(eb[label], ew[label], sub, supply)
        remainder = {l: t for l, t in ew.items() if l not in eb}
        unify_rows(p.a, Row.closed(remainder), sub, supply)
        return True
    return False


# ---------------------------------------------------------------------------
# constraint generation over a graph

@dataclass
class _Obligation:
    a: object  # TypeExpr or Row
    b: object
    loc: Loc
    rows: bool = False


@dataclass
class InferenceResult:
    ok: bool
    graph: Optional[Graph]  # annotated (only when ok)
    scheme: Optional[TypeScheme]
    inputs: Optional[Row]
    outputs: Optional[Row]
    errors: list[TypeViolation] = field(default_factory=list)
    sub: Optional[Substitution] = None  # final substitution, for invariants/tests

    def raise_on_error(self) -> "InferenceResult":
        if not self.ok:
            raise TypeCheckFailure(self.errors)
        return self


class _Inferrer:
    def __init__(self, sigs: SignatureLike):
        self.sigs = sigs
        self.supply = VarSupply()
        self.sub = Substitution()
        self.obligations: list[_Obligation] = []
        self.partitions: list[Partition] = []
        self.errors: list[TypeViolation] = []
        self.poisoned: set[tuple[str, int]] = set()
        self._scheme_cache: dict[Graph, Optional[TypeScheme]] = {}

    # -- helpers ----------------------------------------------------------

    def fail(self, kind: str, loc: Loc, expected: str = "", actual: str = "",
             message: str = "") -> None:
        self.errors.append(TypeViolation(kind, loc, expected, actual, message))

    def register_lacks(self, lacks: list[Lacks]) -> None:
        for l in lacks:
            try:
                self.sub.add_lacks(l.row, l.label)
            except UnifyFailure as f:
                self.fail(f.kind, l.loc, message=f.message)
                self.poison_term(Row.var(l.row))

    def poison_term(self, term) -> None:
        for kv in free_vars(term):
            self.poisoned.add(kv)

    def is_poisoned(self, term) -> bool:
        return any(kv in self.poisoned for kv in free_vars(term))

    # -- value typing ------------------------------------------------------

    def value_type(self, v: Value, loc: Loc) -> TypeExpr:
        if isinstance(v, BoolValue):
            return BOOL
        if isinstance(v, IntValue):
            return INT
        if isinstance(v, FloatValue):
            return FLOAT
        if isinstance(v, StrValue):
            return STR
        if isinstance(v, PairValue):
            return PairType(self.value_type(v.first, loc), self.value_type(v.second, loc))
        if isinstance(v, VecValue):
            if not v.items:
                return VecType(self.supply.fresh_var())
            t0 = self.value_type(v.items[0], loc)
            for item in v.items[1:]:
                self.obligations.append(_Obligation(t0, self.value_type(item, loc), loc))
            return VecType(t0)
        if isinstance(v, MapValue):
            if not v.entries:
                return MapType(self.supply.fresh_var(), self.supply.fresh_var())
            k0 = self.value_type(v.entries[0][0], loc)
            v0 = self.value_type(v.entries[0][1], loc)
            for k, val in v.entries[1:]:
                self.obligations.append(_Obligation(k0, self.value_type(k, loc), loc))
                self.obligations.append(_Obligation(v0, self.value_type(val, loc), loc))
            return MapType(k0, v0)
        if isinstance(v, StructValue):
            return StructType(Row.closed({l: self.value_type(x, loc) for l, x in v.fields}))
        if isinstance(v, VariantValue):
            tail = self.supply.fresh()
            self.register_lacks([Lacks(tail, v.tag, loc)])
            return VariantType(Row.open({v.tag: self.value_type(v.value, loc)}, tail))
        if isinstance(v, GraphValue):
            scheme = self.subgraph_scheme(v.graph, loc)
            if scheme is None:
                tail_i, tail_o = self.supply.fresh(), self.supply.fresh()
                t = GraphType(Row.var(tail_i), Row.var(tail_o))
                self.poison_term(t)
                return t
            inst = instantiate(scheme, self.supply, loc)
            self.register_lacks(inst.lacks)
            self.partitions.extend(inst.partitions)
            return GraphType(inst.inputs, inst.outputs)
        raise TypeError(f"unknown value kind {v!r}")

    def subgraph_scheme(self, g: Graph, loc: Loc) -> Optional[TypeScheme]:
        """Infer a nested graph and treat its signature as a scheme."""
        if g in self._scheme_cache:
            return self._scheme_cache[g]
        nested_loc_path = loc.path + ((loc.node,) if loc.node is not None else ())
        result = infer_graph(g, self.sigs)
        if not result.ok:
            for v in result.errors:
                self.errors.append(replace(v, loc=replace(v.loc, path=nested_loc_path + v.loc.path)))
            self._scheme_cache[g] = None
            return None
        self._scheme_cache[g] = result.scheme
        return result.scheme

    # -- node constraint generation ----------------------------------------

    def node_rows(self, g: Graph, node, loc: Loc) -> Optional[tuple[Row, Row]]:
        """Instantiated (inputs, outputs) rows for a node, or None when the
        node's signature cannot be resolved (error already recorded)."""
        kind = node.kind
        if isinstance(kind, ConstNode):
            return Row.closed({}), Row.closed({"value": self.value_type(kind.value, loc)})
        if isinstance(kind, FunctionNode):
            scheme = self.sigs.lookup_scheme(kind.name)
            if scheme is None:
                self.fail("UnknownFunction", loc, message=f"no worker provides {kind.name!r}")
                return None
            inst = instantiate(scheme, self.supply, loc)
            self.register_lacks(inst.lacks)
            self.partitions.extend(inst.partitions)
            return inst.inputs, inst.outputs
        if isinstance(kind, BoxNode):
            scheme = self.subgraph_scheme(kind.graph, loc)
            if scheme is None:
                return None
            inst = instantiate(scheme, self.supply, loc)
            self.register_lacks(inst.lacks)
            self.partitions.extend(inst.partitions)
            return inst.inputs, inst.outputs
        if isinstance(kind, TagNode):
            payload = self.supply.fresh_var()
            tail = self.supply.fresh()
            self.register_lacks([Lacks(tail, kind.tag, loc)])
            return (Row.closed({"value": payload}),
                    Row.closed({"value": VariantType(Row.open({kind.tag: payload}, tail))}))
        if isinstance(kind, MatchNode):
            handlers = sorted(e.dst[1] for e in g.in_edges(node.id) if e.dst[1] != "variant")
            payload = {t: self.supply.fresh_var() for t in handlers}
            captured = self.supply.fresh()
            out_row = self.supply.fresh()
            self.register_lacks([Lacks(captured, "value", loc)])
            ins = {"variant": VariantType(Row.closed(payload))}
            for t in handlers:
                ins[t] = GraphType(Row.open({"value": payload[t]}, captured), Row.var(out_row))
            thunk = GraphType(Row.var(captured), Row.var(out_row))
            return Row.closed(ins), Row.closed({"thunk": thunk})
        raise TypeError(f"unexpected node kind {kind!r}")

    def connect_side(self, scheme_row: Row, actual: dict[str, VarType], *, is_input: bool,
                     node_id: int, edge_of: dict[str, Edge], loc_path: tuple[int, ...],
                     unfed_ok: bool = False) -> None:
        """Tie one side of a node to its edges.

        Known scheme labels unify per edge (errors point at the edge); labels
        only on the edge side are absorbed by the scheme row's tail; an input
        label with no edge is a missing input unless the caller tolerates it
        (checkpoint resume after edits around already-fired nodes). Output
        ports may go unconsumed.
        """
        entries = dict(scheme_row.entries)
        extras = {}
        for port, var in sorted(actual.items()):
            e = edge_of[port]
            eloc = Loc(edge=e.key(), path=loc_path)
            if port in entries:
                self.obligations.append(_Obligation(entries[port], var, eloc))
            else:
                extras[port] = var
        if is_input and not unfed_ok:
            for port in sorted(set(entries) - set(actual)):
                self.fail("MissingLabel", Loc(node=node_id, port=port, path=loc_path),
                          expected=render_type(entries[port]),
                          message=f"input port {port!r} has no incoming edge")
        if scheme_row.rest is not None:
            # a variable-tailed row is pinned to exactly the connected ports:
            # that keeps signatures closed (one principal rendering) while
            # fixed-label outputs may still go unconsumed
            self.obligations.append(_Obligation(
                Row.var(scheme_row.rest), Row.closed(extras),
                Loc(node=node_id, path=loc_path), rows=True))
        elif extras:
            for port in sorted(extras):
                e = edge_of[port]
                self.fail("MissingLabel", Loc(edge=e.key(), path=loc_path),
                          expected=render_row(scheme_row),
                          message=f"node has no port {port!r}")

    # -- main --------------------------------------------------------------

    def run(self, g: Graph, unfed_ok: frozenset = frozenset()) -> InferenceResult:
        struct_errors = validate_graph(g)
        if unfed_ok:
            struct_errors = [e for e in struct_errors
                             if not (e.kind == "MissingInputEdge" and e.node in unfed_ok)]
        if struct_errors:
            raise InvalidGraph(struct_errors)

        # user annotations may carry variables; keep the supply clear of them
        max_ann = -1
        for e in g.edges:
            if e.ty is not None:
                for _, vid in free_vars(e.ty):
                    max_ann = max(max_ann, vid)
        self.supply = VarSupply(max_ann + 1)

        edge_var: dict[tuple[int, str, int, str], VarType] = {}
        for e in g.edges:
            edge_var[e.key()] = self.supply.fresh_var()

        for e in g.edges:
            if e.ty is not None:
                self.obligations.append(_Obligation(edge_var[e.key()], e.ty,
                                                    Loc(edge=e.key())))

        in_id = g.input_node().id
        out_id = g.output_node().id
        inputs_row = Row.closed({e.src[1]: edge_var[e.key()]
                                 for e in g.edges if e.src[0] == in_id})
        outputs_row = Row.closed({e.dst[1]: edge_var[e.key()]
                                  for e in g.edges if e.dst[0] == out_id})

        for node in g.nodes:
            if isinstance(node.kind, (InputNode, OutputNode)):
                continue
            loc = Loc(node=node.id)
            rows = self.node_rows(g, node, loc)
            in_edges = {e.dst[1]: e for e in g.in_edges(node.id)}
            out_edges = {e.src[1]: e for e in g.out_edges(node.id)}
            if rows is None:
                for e in list(in_edges.values()) + list(out_edges.values()):
                    self.poison_term(edge_var[e.key()])
                continue
            srow_in, srow_out = rows
            self.connect_side(srow_in, {p: edge_var[e.key()] for p, e in in_edges.items()},
                              is_input=True, node_id=node.id, edge_of=in_edges,
                              loc_path=(), unfed_ok=node.id in unfed_ok)
            self.connect_side(srow_out, {p: edge_var[e.key()] for p, e in out_edges.items()},
                              is_input=False, node_id=node.id, edge_of=out_edges, loc_path=())

        self.solve()

        if not self.errors:
            # map-key hashability over the final annotations
            for e in g.edges:
                t = self.sub.apply(edge_var[e.key()])
                bad = _unhashable_map_key(t)
                if bad is not None:
                    self.fail("Mismatch", Loc(edge=e.key()), expected="hashable key type",
                              actual=render_type(bad), message="map keys must be hashable kinds")

        scheme, residual_errors = generalize(inputs_row, outputs_row, self.partitions,
                                             self.sub, poisoned=self.poisoned)
        self.errors.extend(residual_errors)

        if self.errors:
            dedup: list[TypeViolation] = []
            for v in self.errors:
                if v not in dedup:
                    dedup.append(v)
            dedup.sort(key=lambda v: (v.loc.path, v.loc.node if v.loc.node is not None else -1,
                                      v.loc.edge or (), v.loc.port or "", v.kind))
            return InferenceResult(False, None, None, None, None, dedup, self.sub)

        # annotate, then renumber all free vars in first-use order over the
        # canonical edge order so output is deterministic and re-inference is
        # a fixed point
        ann = [self.sub.apply(edge_var[e.key()]) for e in g.edges]
        terms = ann + [scheme.inputs, scheme.outputs] + \
            [r for c in scheme.constraints if isinstance(c, SchemePartition)
             for r in (c.a, c.b, c.whole)]
        renamed, renaming = renumber_vars(terms)
        ann = renamed[: len(ann)]
        body_in, body_out = renamed[len(ann)], renamed[len(ann) + 1]
        part_rows = renamed[len(ann) + 2:]
        constraints: list = []
        for c in scheme.constraints:
            if isinstance(c, SchemeLacks):
                if ("r", c.row) in renaming:
                    constraints.append(SchemeLacks(renaming[("r", c.row)], c.label))
            else:
                a, b, whole = part_rows[:3]
                part_rows = part_rows[3:]
                constraints.append(SchemePartition(a, b, whole))
        quantified = tuple((k, renaming[(k, v)]) for k, v in scheme.quantified
                           if (k, v) in renaming)
        lacks_cons = sorted((c for c in constraints if isinstance(c, SchemeLacks)),
                            key=lambda c: (c.row, c.label))
        part_cons = [c for c in constraints if isinstance(c, SchemePartition)]
        final_scheme = TypeScheme(quantified, (*lacks_cons, *part_cons), body_in, body_out)

        annotated = g.with_edge_types({e.key(): t for e, t in zip(g.edges, ann)})
        return InferenceResult(True, annotated, final_scheme, body_in, body_out, [],
                               self.sub)

    def solve(self) -> None:
        for ob in self.obligations:
            involved = set(free_vars(ob.a)) | set(free_vars(ob.b))
            if involved & self.poisoned:
                continue
            try:
                if ob.rows:
                    unify_rows(ob.a, ob.b, self.sub, self.supply)
                else:
                    unify(ob.a, ob.b, self.sub, self.supply)
            except UnifyFailure as f:
                self.fail(f.kind, ob.loc, f.expected, f.actual, f.message)
                for term in (ob.a, ob.b):
                    self.poison_term(term)
                    self.poison_term(self.sub.apply(term))

        pending = list(self.partitions)
        progress = True
        while progress:
            progress = False
            remaining: list[Partition] = []
            for p in pending:
                terms = (p.a, p.b, p.whole)
                if any(self.is_poisoned(self.sub.apply(t)) for t in terms):
                    continue
                try:
                    if solve_partition(p, self.sub, self.supply):
                        progress = True
                    else:
                        remaining.append(p)
                except UnifyFailure as f:
                    self.fail(f.kind, p.loc, f.expected, f.actual, f.message)
                    for t in terms:
                        self.poison_term(self.sub.apply(t))
            pending = remaining
        self.partitions = pending


def _unhashable_map_key(t: TypeExpr) -> Optional[TypeExpr]:
    """First map key type under ``t`` that can never be hashable, if any."""
    if isinstance(t, MapType):
        if not hashable_type(t.key) and not isinstance(t.key, VarType):
            return t.key
        return _unhashable_map_key(t.key) or _unhashable_map_key(t.value)
    if isinstance(t, PairType):
        return _unhashable_map_key(t.first) or _unhashable_map_key(t.second)
    if isinstance(t, VecType):
        return _unhashable_map_key(t.item)
    if isinstance(t, (StructType, VariantType)):
        for _, x in t.row.entries:
            bad = _unhashable_map_key(x)
            if bad is not None:
                return bad
        return None
    if isinstance(t, GraphType):
        for row in (t.inputs, t.outputs):
            for _, x in row.entries:
                bad = _unhashable_map_key(x)
                if bad is not None:
                    return bad
        return None
    return None


def generalize(inputs: Row, outputs: Row, residual: list[Partition],
               sub: Substitution, poisoned: set[tuple[str, int]] = frozenset()
               ) -> tuple[TypeScheme, list[TypeViolation]]:
    """Quantify the free variables of the signature rows, retaining lacks and
    still-deferred partitions that touch them. A deferred partition whose
    variables are unreachable from the signature is unsolvable."""
    body_in = sub.apply(inputs)
    body_out = sub.apply(outputs)
    quant: list[tuple[str, int]] = []
    free_vars(body_in, quant)
    free_vars(body_out, quant)

    parts = [(sub.apply(p.a), sub.apply(p.b), sub.apply(p.whole), p.loc) for p in residual]
    retained: list[tuple[Row, Row, Row]] = []
    errors: list[TypeViolation] = []
    changed = True
    pending = list(parts)
    while changed:
        changed = False
        still = []
        for a, b, whole, loc in pending:
            vs: list[tuple[str, int]] = []
            for r in (a, b, whole):
                free_vars(r, vs)
            if any(v in quant for v in vs):
                retained.append((a, b, whole))
                for v in vs:
                    if v not in quant:
                        quant.append(v)
                changed = True
            else:
                still.append((a, b, whole, loc))
        pending = still
    for a, b, whole, loc in pending:
        vs: list[tuple[str, int]] = []
        for r in (a, b, whole):
            free_vars(r, vs)
        if any(v in poisoned for v in vs):
            continue
        errors.append(TypeViolation(
            "UnsolvedPartition", loc,
            message=f"cannot determine how {render_row(whole)} splits into "
                    f"{render_row(a)} and {render_row(b)}"))

    constraints: list = []
    for kind, vid in quant:
        if kind == "r":
            for label in sorted(sub.lacks.get(vid, ())):
                constraints.append(SchemeLacks(vid, label))
    for a, b, whole in retained:
        constraints.append(SchemePartition(a, b, whole))
    return TypeScheme(tuple(quant), tuple(constraints), body_in, body_out), errors


def infer_graph(g: Graph, sigs: SignatureLike,
                unfed_ok: frozenset = frozenset()) -> InferenceResult:
    """Infer a most general typing for a structurally valid graph.

    On success the result carries the graph with every edge annotated and a
    closed scheme for the graph's signature; on failure, all independent
    violations found. ``unfed_ok`` names nodes whose missing input edges are
    tolerated (resume-time inference of edited graphs around fired nodes).
    """
    return _Inferrer(sigs).run(g, unfed_ok)


def infer_value_type(v: Value, sigs: SignatureLike) -> TypeExpr:
    """Ground-or-polymorphic type of a standalone value.

    Container element clashes raise TypeCheckFailure.
    """
    inf = _Inferrer(sigs)
    t = inf.value_type(v, Loc())
    inf.solve()
    if inf.errors:
        raise TypeCheckFailure(inf.errors)
    return inf.sub.apply(t)
