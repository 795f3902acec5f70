import itertools
import random

import pytest

from tierkreis import examples
from tierkreis.builder import GraphBuilder
from tierkreis.graph import (ConstNode, Edge, FunctionNode, Graph, InputNode,
                             InvalidGraph, Node, OutputNode, graph_signature,
                             insert_copies, topological_sort, validate_graph)
from tierkreis.typesys.exprs import VarType, render_row
from tierkreis.values import FloatValue, value_of


def empty_graph():
    return Graph([Node(0, InputNode()), Node(1, OutputNode())], [])


def test_fig1a_is_valid(fig1a):
    assert validate_graph(fig1a) == []


def test_empty_graph_is_valid():
    assert validate_graph(empty_graph()) == []


def test_duplicate_input_edge_reported():
    g = Graph(
        [Node(0, InputNode()), Node(1, OutputNode()), Node(2, FunctionNode("builtin/fsub"))],
        [Edge((0, "x"), (2, "a")), Edge((0, "y"), (2, "a")),
         Edge((2, "value"), (1, "out"))])
    errs = validate_graph(g)
    assert any(e.kind == "DuplicateInputEdge" and e.node == 2 and e.port == "a"
               for e in errs)


def test_fanout_reported_without_copy():
    g = Graph(
        [Node(0, InputNode()), Node(1, OutputNode())],
        [Edge((0, "x"), (1, "a")), Edge((0, "x"), (1, "b"))])
    errs = validate_graph(g)
    assert any(e.kind == "FanOut" for e in errs)
    assert validate_graph(g, allow_fanout=True) == []


def test_cycle_detected():
    g = Graph(
        [Node(0, InputNode()), Node(1, OutputNode()),
         Node(2, FunctionNode("builtin/id")), Node(3, FunctionNode("builtin/id"))],
        [Edge((2, "value"), (3, "value")), Edge((3, "value"), (2, "value"))])
    errs = validate_graph(g)
    assert any(e.kind == "Cycle" for e in errs)
    assert topological_sort(g) is None


def test_input_output_counts():
    g = Graph([Node(0, InputNode())], [])
    kinds = {e.kind for e in validate_graph(g)}
    assert "OutputNodeCount" in kinds


def test_dangling_edge():
    g = Graph([Node(0, InputNode()), Node(1, OutputNode())],
              [Edge((7, "x"), (1, "y"))])
    assert any(e.kind == "DanglingEdge" for e in validate_graph(g))


def test_validation_order_deterministic():
    g = Graph(
        [Node(0, InputNode()), Node(1, OutputNode()), Node(2, FunctionNode("f/f")),
         Node(3, FunctionNode("f/g"))],
        [Edge((0, "x"), (3, "a")), Edge((0, "y"), (3, "a")),
         Edge((0, "z"), (2, "a")), Edge((0, "w"), (2, "a"))])
    errs = validate_graph(g)
    nodes = [e.node for e in errs if e.kind == "DuplicateInputEdge"]
    assert nodes == sorted(nodes)


def test_signature_of_fig1a(fig1a):
    ins, outs = graph_signature(fig1a)
    assert ins.labels() == ["x"]
    assert outs.labels() == ["parity"]


def test_signature_passthrough_shares_variable():
    ins, outs = graph_signature(examples.passthrough())
    assert ins.to_dict()["v"] == VarType(0)
    assert outs.to_dict()["v"] == VarType(0)
    assert render_row(ins) == "(v: var0)"


def test_signature_requires_valid_graph():
    g = Graph([Node(0, InputNode())], [])
    with pytest.raises(InvalidGraph):
        graph_signature(g)


# -- insert_copies -------------------------------------------------------------

def _fanout_graph(n_consumers: int) -> Graph:
    nodes = [Node(0, InputNode()), Node(1, OutputNode()),
             Node(2, ConstNode(FloatValue(1.0)))]
    edges = []
    for i in range(n_consumers):
        nid = 3 + i
        nodes.append(Node(nid, FunctionNode("builtin/fneg")))
        edges.append(Edge((2, "value"), (nid, "value")))
        edges.append(Edge((nid, "value"), (1, f"o{i}")))
    return Graph(nodes, edges)


@pytest.mark.parametrize("n,copies", [(2, 1), (3, 2), (5, 4)])
def test_insert_copies_count(n, copies):
    g = insert_copies(_fanout_graph(n))
    assert validate_graph(g) == []
    copy_nodes = [x for x in g.nodes
                  if isinstance(x.kind, FunctionNode) and x.kind.name == "builtin/copy"]
    assert len(copy_nodes) == copies
    # all original consumers still fed exactly once
    for i in range(n):
        assert len(g.in_edges(3 + i)) == 1


def test_insert_copies_identity_when_no_fanout(fig1a):
    assert insert_copies(fig1a) == fig1a


def test_insert_copies_preserves_semantics():
    from tierkreis.executor import RunOptions, run_graph

    g = insert_copies(_fanout_graph(3))
    from tierkreis.builtins import builtin_index

    out = run_graph(g, {}, builtin_index(), RunOptions(max_concurrency=1))
    assert all(out[f"o{i}"] == FloatValue(-1.0) for i in range(3))


# -- brute-force cross-check ----------------------------------------------------

def _random_small_graph(rng: random.Random) -> Graph:
    """Arbitrary wiring (often invalid) over at most 12 nodes."""
    n_mid = rng.randint(0, 6)
    nodes = [Node(0, InputNode()), Node(1, OutputNode())]
    for i in range(n_mid):
        nodes.append(Node(2 + i, FunctionNode("builtin/id")))
    edges = []
    for _ in range(rng.randint(0, 10)):
        src = rng.choice(nodes).id
        dst = rng.choice(nodes).id
        edges.append(Edge((src, f"p{rng.randint(0, 2)}"), (dst, f"q{rng.randint(0, 2)}")))
    return Graph(nodes, edges)


def _has_cycle_brute(g: Graph) -> bool:
    """Exhaustive cycle scan: some permutation is a topological order."""
    ids = [n.id for n in g.nodes]
    deps = {(e.src[0], e.dst[0]) for e in g.edges}
    if len(ids) > 7:  # permutations explode; fall back to path search
        return topological_sort(g) is None
    for perm in itertools.permutations(ids):
        pos = {n: i for i, n in enumerate(perm)}
        if all(pos[a] < pos[b] for a, b in deps if a in pos and b in pos):
            return False
    return True


def test_validate_agrees_with_brute_force_cycle_scan():
    rng = random.Random(7)
    for _ in range(150):
        g = _random_small_graph(rng)
        brute_cyclic = _has_cycle_brute(g)
        kinds = {e.kind for e in validate_graph(g, allow_fanout=True)}
        assert ("Cycle" in kinds) == brute_cyclic


def test_builder_inserts_copies_automatically():
    b = GraphBuilder()
    x = b.const(2.0)
    n1 = b.fn("builtin/fneg", value=x)
    n2 = b.fn("builtin/fneg", value=x)
    b.output(a=n1["value"], b=n2["value"])
    g = b.build()
    assert validate_graph(g) == []
    assert any(isinstance(n.kind, FunctionNode) and n.kind.name == "builtin/copy"
               for n in g.nodes)


def test_box_ports_must_match_subgraph(fig1a):
    b = GraphBuilder()
    box = b.box(fig1a, x=b.const(0.1), bogus=b.const(1.0))
    b.output(p=box["parity"])
    with pytest.raises(InvalidGraph) as e:
        b.build()
    assert any(err.kind == "BadPort" for err in e.value.errors)


def test_box_signature_equals_subgraph_signature(fig1a, builtins):
    b = GraphBuilder()
    box = b.box(fig1a, x=b.input("x"))
    b.output(parity=box["parity"])
    g = b.build()
    ins, outs = graph_signature(g)
    sins, souts = graph_signature(fig1a)
    assert ins.labels() == sins.labels()
    assert outs.labels() == souts.labels()
