"""Brute-force typing oracle for random graphs.

Independent of the inference engine: every assignment of ground types from a
finite universe to the graph's true degrees of freedom (graph inputs and
thunk-library type parameters) is forward-propagated through node-local
signature rules; assignments surviving every local check are the
oracle-consistent typings. Inference must accept exactly when at least one
class of assignments exists, and every surviving assignment must be an
instance of the inferred annotation.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Optional

from tierkreis.examples import zexp_to_parity
from tierkreis.graph import (ConstNode, Edge, FunctionNode, Graph, InputNode,
                             Node, OutputNode, topological_sort)
from tierkreis.typesys.exprs import (FLOAT, INT, STR, GraphType, PairType,
                                     Row, TypeExpr, VecType)
from tierkreis.values import (FloatValue, GraphValue, IntValue, PairValue,
                              StrValue, Value, VecValue)

# depth-2 universe over {Int, Float, Str} closed under Vec and Pair
_T0: list[TypeExpr] = [INT, FLOAT, STR]
_T1: list[TypeExpr] = (_T0
                       + [VecType(t) for t in _T0]
                       + [PairType(a, b) for a in _T0 for b in _T0])
UNIVERSE: list[TypeExpr] = (_T0
                            + [VecType(t) for t in _T1]
                            + [PairType(a, b) for a in _T1 for b in _T1])


def value_for(t: TypeExpr, rng: random.Random) -> Value:
    if t == INT:
        return IntValue(rng.randint(-9, 9))
    if t == FLOAT:
        return FloatValue(round(rng.uniform(-2, 2), 3))
    if t == STR:
        return StrValue(rng.choice("abcxyz"))
    if isinstance(t, VecType):
        return VecValue([value_for(t.item, rng) for _ in range(rng.randint(1, 2))])
    if isinstance(t, PairType):
        return PairValue(value_for(t.first, rng), value_for(t.second, rng))
    raise ValueError(t)


def ground_type(v: Value) -> TypeExpr:
    if isinstance(v, IntValue):
        return INT
    if isinstance(v, FloatValue):
        return FLOAT
    if isinstance(v, StrValue):
        return STR
    if isinstance(v, VecValue):
        return VecType(ground_type(v.items[0]))  # generator vecs are non-empty
    if isinstance(v, PairValue):
        return PairType(ground_type(v.first), ground_type(v.second))
    raise ValueError(v)


@dataclass
class ThunkEntry:
    """A library graph usable as an eval thunk, with its signature rows as a
    function of the entry's type parameters."""

    name: str
    graph: Graph
    n_params: int
    in_row: Callable[[list], dict[str, Optional[TypeExpr]]]
    out_row: Callable[[list], dict[str, Optional[TypeExpr]]]


def _passthrough() -> Graph:
    return Graph([Node(0, InputNode()), Node(1, OutputNode())],
                 [Edge((0, "v"), (1, "v"))])


def _push_once() -> Graph:
    return Graph(
        [Node(0, InputNode()), Node(1, OutputNode()),
         Node(2, FunctionNode("builtin/push"))],
        [Edge((0, "vec"), (2, "vec")), Edge((0, "item"), (2, "item")),
         Edge((2, "vec"), (1, "vec"))])


LIBRARY = [
    ThunkEntry("ident", _passthrough(), 1,
               lambda ps: {"v": ps[0]}, lambda ps: {"v": ps[0]}),
    ThunkEntry("parity", zexp_to_parity(), 0,
               lambda ps: {"x": FLOAT}, lambda ps: {"parity": FLOAT}),
    ThunkEntry("push1", _push_once(), 1,
               lambda ps: {"vec": VecType(ps[0]) if ps[0] is not None else None,
                           "item": ps[0]},
               lambda ps: {"vec": VecType(ps[0]) if ps[0] is not None else None}),
]


@dataclass
class GeneratedGraph:
    graph: Graph
    dims: list[tuple]  # ("input", label) | ("thunk", const node id, param index)
    thunks: dict[int, ThunkEntry]  # const node id -> entry


FN_PORTS = {
    "builtin/fsub": ["a", "b"],
    "builtin/fdiv": ["a", "b"],
    "builtin/make_pair": ["first", "second"],
    "builtin/push": ["vec", "item"],
}
FN_OUT = {
    "builtin/fsub": "value",
    "builtin/fdiv": "value",
    "builtin/make_pair": "pair",
    "builtin/push": "vec",
}
CONST_POOL: list[TypeExpr] = [INT, FLOAT, STR, VecType(FLOAT), VecType(INT),
                              PairType(INT, STR)]


def generate(seed: int) -> GeneratedGraph:
    """A structurally valid, possibly ill-typed graph of at most 10 nodes
    over the restricted builtin set, with at most 2 degrees of freedom."""
    rng = random.Random(seed)
    nodes = [Node(0, InputNode()), Node(1, OutputNode())]
    edges: list[Edge] = []
    next_id = 2
    dims: list[tuple] = []
    thunks: dict[int, ThunkEntry] = {}
    avail: list[tuple[int, str]] = []
    max_dims = rng.choice([0, 0, 1, 1, 1, 1, 2, 2])
    n_inputs = 0

    def new_node(kind) -> int:
        nonlocal next_id
        nodes.append(Node(next_id, kind))
        next_id += 1
        return next_id - 1

    def feed(dst: int, port: str, hint: TypeExpr | None = None) -> None:
        nonlocal n_inputs
        r = rng.random()
        if avail and r < 0.5:
            src = avail.pop(rng.randrange(len(avail)))
            edges.append(Edge(src, (dst, port)))
        elif len(dims) < max_dims and r < 0.75:
            label = f"x{n_inputs}"
            n_inputs += 1
            dims.append(("input", label))
            edges.append(Edge((0, label), (dst, port)))
        else:
            # mostly respect the port's natural type so a useful share of
            # generated graphs is well-typed
            t = hint if hint is not None and rng.random() < 0.8 else rng.choice(CONST_POOL)
            cid = new_node(ConstNode(value_for(t, rng)))
            edges.append(Edge((cid, "value"), (dst, port)))

    FN_HINTS = {
        "builtin/fsub": {"a": FLOAT, "b": FLOAT},
        "builtin/fdiv": {"a": FLOAT, "b": FLOAT},
        "builtin/make_pair": {},
        "builtin/push": {"vec": VecType(FLOAT), "item": FLOAT},
    }
    for _ in range(rng.randint(1, 5)):
        if len(nodes) >= 9:
            break
        use_eval = rng.random() < 0.3
        if use_eval:
            candidates = [e for e in LIBRARY if e.n_params <= max_dims - len(dims)]
            if not candidates:
                use_eval = False
        if use_eval:
            entry = rng.choice(candidates)
            cid = new_node(ConstNode(GraphValue(entry.graph)))
            thunks[cid] = entry
            for k in range(entry.n_params):
                dims.append(("thunk", cid, k))
            ev = new_node(FunctionNode("builtin/eval"))
            edges.append(Edge((cid, "value"), (ev, "thunk")))
            hints = entry.in_row([FLOAT] * entry.n_params)
            for port in entry.in_row([None] * entry.n_params):
                feed(ev, port, hints.get(port))
            for port in entry.out_row([None] * entry.n_params):
                avail.append((ev, port))
        else:
            name = rng.choice(sorted(FN_PORTS))
            nid = new_node(FunctionNode(name))
            for port in FN_PORTS[name]:
                feed(nid, port, FN_HINTS[name].get(port))
            avail.append((nid, FN_OUT[name]))

    for i, src in enumerate(avail):
        edges.append(Edge(src, (1, f"o{i}")))

    # occasionally swap a constant for a differently-typed one
    if rng.random() < 0.35:
        const_ids = [n.id for n in nodes
                     if isinstance(n.kind, ConstNode) and n.id not in thunks]
        if const_ids:
            victim = rng.choice(const_ids)
            nodes = [Node(victim, ConstNode(value_for(rng.choice(CONST_POOL), rng)))
                     if n.id == victim else n for n in nodes]

    return GeneratedGraph(Graph(nodes, edges), dims, thunks)


# -- forward propagation --------------------------------------------------------

def _propagate(gen: GeneratedGraph, assignment: dict) -> Optional[dict]:
    """Edge types under a (possibly partial) dim assignment.

    None entries mean not-yet-determined; returns None for locally
    inconsistent assignments.
    """
    g = gen.graph
    order = topological_sort(g)
    out_ty: dict[tuple[int, str], Optional[TypeExpr]] = {}
    in_edges: dict[int, list[Edge]] = {n.id: [] for n in g.nodes}
    for e in g.edges:
        in_edges[e.dst[0]].append(e)

    def edge_ty(e: Edge) -> Optional[TypeExpr]:
        return out_ty.get(e.src)

    for nid in order:
        node = g.node(nid)
        kind = node.kind
        if isinstance(kind, InputNode):
            for e in g.edges:
                if e.src[0] == nid:
                    out_ty[e.src] = assignment.get(("input", e.src[1]))
        elif isinstance(kind, OutputNode):
            continue
        elif isinstance(kind, ConstNode):
            if nid in gen.thunks:
                entry = gen.thunks[nid]
                params = [assignment.get(("thunk", nid, k))
                          for k in range(entry.n_params)]
                ins = entry.in_row(params)
                outs = entry.out_row(params)
                if any(v is None for v in (*ins.values(), *outs.values())):
                    out_ty[(nid, "value")] = None
                else:
                    out_ty[(nid, "value")] = GraphType(Row.closed(ins), Row.closed(outs))
            else:
                out_ty[(nid, "value")] = ground_type(kind.value)
        elif isinstance(kind, FunctionNode):
            ins = {e.dst[1]: edge_ty(e) for e in in_edges[nid]}
            if kind.name in ("builtin/fsub", "builtin/fdiv"):
                for p in ("a", "b"):
                    if ins.get(p) is not None and ins[p] != FLOAT:
                        return None
                out_ty[(nid, "value")] = FLOAT
            elif kind.name == "builtin/make_pair":
                f, s = ins.get("first"), ins.get("second")
                out_ty[(nid, "pair")] = (PairType(f, s)
                                         if f is not None and s is not None else None)
            elif kind.name == "builtin/push":
                vec, item = ins.get("vec"), ins.get("item")
                if vec is not None and not isinstance(vec, VecType):
                    return None
                if vec is not None and item is not None and vec.item != item:
                    return None
                out_ty[(nid, "vec")] = vec
            elif kind.name == "builtin/eval":
                thunk_edge = next(e for e in in_edges[nid] if e.dst[1] == "thunk")
                cid = thunk_edge.src[0]
                entry = gen.thunks[cid]
                params = [assignment.get(("thunk", cid, k))
                          for k in range(entry.n_params)]
                want_in = entry.in_row(params)
                supplied = {e.dst[1]: edge_ty(e) for e in in_edges[nid]
                            if e.dst[1] != "thunk"}
                if set(supplied) != set(want_in):
                    return None
                for p, t in supplied.items():
                    if t is not None and want_in[p] is not None and t != want_in[p]:
                        return None
                want_out = entry.out_row(params)
                consumed = {e.src[1] for e in g.edges if e.src[0] == nid}
                if consumed != set(want_out):
                    return None
                for p, t in want_out.items():
                    out_ty[(nid, p)] = t
            else:
                raise AssertionError(kind.name)
    return {e.key(): edge_ty(e) for e in g.edges}


def oracle_assignments(gen: GeneratedGraph, cap: int = 100000):
    """Yield complete edge-type maps for every consistent full assignment."""
    dims = gen.dims
    count = 0

    def recurse(i: int, assignment: dict):
        nonlocal count
        result = _propagate(gen, assignment)
        if result is None:
            return
        if i == len(dims):
            count += 1
            if count > cap:
                raise RuntimeError("oracle enumeration blew the cap")
            yield result
            return
        for t in UNIVERSE:
            assignment[dims[i]] = t
            yield from recurse(i + 1, assignment)
        del assignment[dims[i]]

    yield from recurse(0, {})
