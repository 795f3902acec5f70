"""Dataflow graph IR: typed nodes, port-to-port edges, and structural rules.

A graph is an immutable directed acyclic multigraph. Each edge carries at
most one value at runtime, so the IR forbids two edges leaving the same
output port; fan-out is normalized through explicit ``builtin/copy`` nodes
by :func:`insert_copies`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Optional, Union

from .values import GraphValue, Value, kind_name

PORT_RE = re.compile(r"[a-zA-Z_][a-zA-Z0-9_]*\Z")


class InvalidGraph(Exception):
    """Operation attempted on a graph that fails structural validation."""

    def __init__(self, errors: list["StructuralError"]):
        self.errors = errors
        super().__init__("; ".join(str(e) for e in errors) or "invalid graph")


@dataclass(frozen=True)
class InputNode:
    pass


@dataclass(frozen=True)
class OutputNode:
    pass


@dataclass(frozen=True)
class ConstNode:
    value: Value


@dataclass(frozen=True)
class FunctionNode:
    name: str  # qualified "namespace/fname"


@dataclass(frozen=True)
class BoxNode:
    graph: "Graph"
    label: Optional[str] = None


@dataclass(frozen=True)
class MatchNode:
    pass


@dataclass(frozen=True)
class TagNode:
    tag: str


NodeKind = Union[InputNode, OutputNode, ConstNode, FunctionNode, BoxNode, MatchNode, TagNode]


@dataclass(frozen=True)
class Node:
    id: int
    kind: NodeKind


@dataclass(frozen=True)
class Edge:
    src: tuple[int, str]  # (node id, output port)
    dst: tuple[int, str]  # (node id, input port)
    ty: Optional[object] = None  # TypeExpr annotation

    def key(self) -> tuple[int, str, int, str]:
        return (self.src[0], self.src[1], self.dst[0], self.dst[1])


@dataclass(frozen=True)
class Graph:
    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]
    name: Optional[str] = None

    def __init__(self, nodes: Iterable[Node] = (), edges: Iterable[Edge] = (),
                 name: Optional[str] = None) -> None:
        # Stored sorted so structural equality is plain tuple equality and
        # serialization is canonical without a separate normalization pass.
        object.__setattr__(self, "nodes", tuple(sorted(nodes, key=lambda n: n.id)))
        object.__setattr__(self, "edges", tuple(sorted(edges, key=Edge.key)))
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "_hash", None)

    def __hash__(self) -> int:
        # memoized: graphs are immutable and hashed hot (scheme caches)
        h = self._hash
        if h is None:
            h = hash((self.nodes, self.edges, self.name))
            object.__setattr__(self, "_hash", h)
        return h

    def node(self, node_id: int) -> Node:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def input_node(self) -> Node:
        return next(n for n in self.nodes if isinstance(n.kind, InputNode))

    def output_node(self) -> Node:
        return next(n for n in self.nodes if isinstance(n.kind, OutputNode))

    def in_edges(self, node_id: int) -> list[Edge]:
        return [e for e in self.edges if e.dst[0] == node_id]

    def out_edges(self, node_id: int) -> list[Edge]:
        return [e for e in self.edges if e.src[0] == node_id]

    def input_ports(self) -> list[str]:
        """Labels of the graph's inputs (edges leaving the Input node)."""
        inp = self.input_node()
        return sorted({e.src[1] for e in self.edges if e.src[0] == inp.id})

    def output_ports(self) -> list[str]:
        out = self.output_node()
        return sorted({e.dst[1] for e in self.edges if e.dst[0] == out.id})

    def with_edge_types(self, types: dict[tuple[int, str, int, str], object]) -> "Graph":
        edges = [Edge(e.src, e.dst, types.get(e.key(), e.ty)) for e in self.edges]
        return Graph(self.nodes, edges, self.name)

    def strip_types(self) -> "Graph":
        return Graph(self.nodes, [Edge(e.src, e.dst) for e in self.edges], self.name)


@dataclass(frozen=True)
class StructuralError:
    kind: str
    node: Optional[int] = None
    port: Optional[str] = None
    message: str = ""
    path: tuple[int, ...] = ()  # node-id chain into nested subgraphs

    def __str__(self) -> str:
        where = "/".join(f"node {i}" for i in self.path) or "root"
        loc = f"{where}, node {self.node}" if self.node is not None else where
        if self.port is not None:
            loc += f" port {self.port!r}"
        return f"{self.kind} at {loc}: {self.message}"


def topological_sort(g: Graph) -> Optional[list[int]]:
    """Kahn topological order of node ids, or None if the graph has a cycle."""
    ids = [n.id for n in g.nodes]
    indeg = {i: 0 for i in ids}
    succ: dict[int, list[int]] = {i: [] for i in ids}
    for e in g.edges:
        if e.src[0] in indeg and e.dst[0] in indeg:
            succ[e.src[0]].append(e.dst[0])
            indeg[e.dst[0]] += 1
    ready = sorted(i for i in ids if indeg[i] == 0)
    order: list[int] = []
    while ready:
        i = ready.pop(0)
        order.append(i)
        for j in sorted(succ[i]):
            indeg[j] -= 1
            if indeg[j] == 0:
                ready.append(j)
        ready.sort()
    return order if len(order) == len(ids) else None


def validate_graph(g: Graph, *, allow_fanout: bool = False,
                   _path: tuple[int, ...] = ()) -> list[StructuralError]:
    """Every violation of the structural invariants, deterministically ordered.

    Checks node-id uniqueness, the single Input/Output rule, port name syntax,
    edge endpoint sanity, per-kind port shapes, the one-edge-per-input-port and
    (unless ``allow_fanout``) at-most-one-edge-per-output-port rules, and
    acyclicity. Box subgraphs and constant graph values are validated
    recursively, with their errors located by node-id path.
    """
    errs: list[StructuralError] = []

    def err(kind: str, node: Optional[int] = None, port: Optional[str] = None, msg: str = "") -> None:
        errs.append(StructuralError(kind, node, port, msg, _path))

    ids = [n.id for n in g.nodes]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        for i in dupes:
            err("DuplicateNodeId", i, msg=f"node id {i} used more than once")
    by_id = {n.id: n for n in g.nodes}

    inputs = [n for n in g.nodes if isinstance(n.kind, InputNode)]
    outputs = [n for n in g.nodes if isinstance(n.kind, OutputNode)]
    if len(inputs) != 1:
        err("InputNodeCount", msg=f"expected exactly one Input node, found {len(inputs)}")
    if len(outputs) != 1:
        err("OutputNodeCount", msg=f"expected exactly one Output node, found {len(outputs)}")

    for e in sorted(g.edges, key=Edge.key):
        for (nid, port), side in ((e.src, "src"), (e.dst, "dst")):
            if nid not in by_id:
                err("DanglingEdge", nid, port, f"edge {side} references missing node {nid}")
            if not PORT_RE.match(port):
                err("BadPortName", nid, port, f"invalid port name {port!r}")

    edges = [e for e in g.edges if e.src[0] in by_id and e.dst[0] in by_id]

    # one edge per input port; at most one per output port
    in_seen: dict[tuple[int, str], int] = {}
    out_seen: dict[tuple[int, str], int] = {}
    for e in edges:
        in_seen[e.dst] = in_seen.get(e.dst, 0) + 1
        out_seen[e.src] = out_seen.get(e.src, 0) + 1
    for (nid, port), count in sorted(in_seen.items()):
        if count > 1:
            err("DuplicateInputEdge", nid, port, f"{count} edges target input port {port!r}")
    if not allow_fanout:
        for (nid, port), count in sorted(out_seen.items()):
            if count > 1:
                err("FanOut", nid, port,
                    f"{count} edges leave output port {port!r}; route through builtin/copy")

    for n in sorted(g.nodes, key=lambda n: n.id):
        kind = n.kind
        n_in = sorted(e.dst[1] for e in edges if e.dst[0] == n.id)
        n_out = sorted(e.src[1] for e in edges if e.src[0] == n.id)
        if isinstance(kind, InputNode):
            for p in n_in:
                err("EdgeIntoInput", n.id, p, "Input node has no input ports")
        elif isinstance(kind, OutputNode):
            for p in n_out:
                err("EdgeOutOfOutput", n.id, p, "Output node has no output ports")
        elif isinstance(kind, ConstNode):
            for p in n_in:
                err("BadPort", n.id, p, "Const nodes have no input ports")
            for p in n_out:
                if p != "value":
                    err("BadPort", n.id, p, "Const output port must be 'value'")
            if isinstance(kind.value, GraphValue):
                sub = validate_graph(kind.value.graph, _path=_path + (n.id,))
                errs.extend(sub)
        elif isinstance(kind, TagNode):
            if n_in != ["value"]:
                err("BadPort", n.id, None, f"Tag node needs exactly input 'value', got {n_in}")
            for p in n_out:
                if p != "value":
                    err("BadPort", n.id, p, "Tag output port must be 'value'")
        elif isinstance(kind, MatchNode):
            if "variant" not in n_in:
                err("BadPort", n.id, "variant", "Match node requires input port 'variant'")
            if not [p for p in n_in if p != "variant"]:
                err("BadPort", n.id, None, "Match node requires at least one handler port")
            for p in n_out:
                if p != "thunk":
                    err("BadPort", n.id, p, "Match output port must be 'thunk'")
        elif isinstance(kind, BoxNode):
            sub_errs = validate_graph(kind.graph, _path=_path + (n.id,))
            errs.extend(sub_errs)
            if not sub_errs:
                want_in = kind.graph.input_ports()
                want_out = set(kind.graph.output_ports())
                for p in n_in:
                    if p not in want_in:
                        err("BadPort", n.id, p, "not an input port of the boxed graph")
                for p in want_in:
                    if p not in n_in:
                        err("MissingInputEdge", n.id, p, "boxed graph input port not fed")
                for p in n_out:
                    if p not in want_out:
                        err("BadPort", n.id, p, "not an output port of the boxed graph")

    if topological_sort(g) is None:
        err("Cycle", msg="graph is not acyclic")

    errs.sort(key=lambda s: (s.path, s.node if s.node is not None else -1, s.port or "", s.kind))
    return errs


def graph_signature(g: Graph, fresh_start: int = 0):
    """Structural (inputs, outputs) rows of a valid graph.

    Annotated edges contribute their annotation; unannotated edges get fresh
    type variables numbered from ``fresh_start`` in canonical edge order. The
    same edge feeding both rows (Input wired straight to Output) shares one
    variable.
    """
    from .typesys.exprs import Row, VarType

    errs = validate_graph(g)
    if errs:
        raise InvalidGraph(errs)
    in_id = g.input_node().id
    out_id = g.output_node().id
    counter = fresh_start
    edge_ty: dict[tuple[int, str, int, str], object] = {}
    for e in g.edges:
        if e.src[0] == in_id or e.dst[0] == out_id:
            if e.ty is not None:
                edge_ty[e.key()] = e.ty
            else:
                edge_ty[e.key()] = VarType(counter)
                counter += 1
    ins = {e.src[1]: edge_ty[e.key()] for e in g.edges if e.src[0] == in_id}
    outs = {e.dst[1]: edge_ty[e.key()] for e in g.edges if e.dst[0] == out_id}
    return Row.closed(ins), Row.closed(outs)


def insert_copies(g: Graph) -> Graph:
    """Normalize fan-out through balanced trees of 1-in/2-out copy nodes.

    Accepts a graph valid in every respect except that output ports may have
    several outgoing edges; each such port is rerouted through ``n - 1``
    ``builtin/copy`` nodes feeding its ``n`` consumers.
    """
    errs = validate_graph(g, allow_fanout=True)
    if errs:
        raise InvalidGraph(errs)
    by_src: dict[tuple[int, str], list[Edge]] = {}
    for e in g.edges:
        by_src.setdefault(e.src, []).append(e)

    nodes = list(g.nodes)
    edges = [e for e in g.edges if len(by_src[e.src]) == 1]
    next_id = max((n.id for n in g.nodes), default=-1) + 1

    def spread(src: tuple[int, str], dests: list[Edge]) -> None:
        nonlocal next_id
        if len(dests) == 1:
            edges.append(Edge(src, dests[0].dst, dests[0].ty))
            return
        copy = Node(next_id, FunctionNode("builtin/copy"))
        next_id += 1
        nodes.append(copy)
        edges.append(Edge(src, (copy.id, "value")))
        half = (len(dests) + 1) // 2
        spread((copy.id, "value_0"), dests[:half])
        spread((copy.id, "value_1"), dests[half:])

    for src, dests in sorted(by_src.items()):
        if len(dests) > 1:
            spread(src, sorted(dests, key=Edge.key))

    return Graph(nodes, edges, g.name)


def const_value_summary(v: Value, limit: int = 24) -> str:
    """Short display text for a constant, used by DOT export and errors."""
    from .values import (BoolValue, FloatValue, IntValue, MapValue, PairValue,
                         StrValue, StructValue, VariantValue, VecValue)

    if isinstance(v, (BoolValue, IntValue, FloatValue)):
        text = repr(v.value)
    elif isinstance(v, StrValue):
        text = repr(v.value)
    elif isinstance(v, VecValue):
        text = "[" + ",".join(const_value_summary(x, 8) for x in v.items) + "]"
    elif isinstance(v, PairValue):
        text = f"({const_value_summary(v.first, 8)},{const_value_summary(v.second, 8)})"
    elif isinstance(v, MapValue):
        text = "{...}" if v.entries else "{}"
    elif isinstance(v, StructValue):
        text = "{" + ",".join(l for l, _ in v.fields) + "}"
    elif isinstance(v, VariantValue):
        text = f"{v.tag}({const_value_summary(v.value, 8)})"
    elif isinstance(v, GraphValue):
        text = f"<graph {v.graph.name}>" if v.graph.name else "<graph>"
    else:
        text = kind_name(v)
    if len(text) > limit:
        text = text[: limit - 1] + "…"
    return text
