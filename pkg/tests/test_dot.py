import pytest

from tierkreis import examples
from tierkreis.builtins import builtin_index
from tierkreis.dot import to_dot
from tierkreis.graph import Graph, InputNode, InvalidGraph, Node, OutputNode
from tierkreis.typesys import infer_graph


def test_fig1a_dot_contains_function_labels(fig1a):
    text = to_dot(fig1a)
    assert text.startswith("digraph")
    assert "fsub" in text and "fdiv" in text
    assert "n0:x" in text  # port-level edge endpoints


def test_passthrough_dot_has_io_records_only():
    text = to_dot(examples.passthrough())
    assert "Input" in text and "Output" in text
    assert text.count("label=") == 2


def test_annotated_dot_carries_variable(fig1b):
    annotated = infer_graph(fig1b, builtin_index()).graph
    text = to_dot(annotated, annotated=True)
    assert "var0" in text


def test_dot_escapes_special_characters():
    from tierkreis.builder import GraphBuilder

    b = GraphBuilder()
    c = b.const("a|b{c}")
    n = b.fn("builtin/id", value=c)
    b.output(v=n["value"])
    text = to_dot(b.build())
    assert "\\|" in text and "\\{" in text


def test_dot_requires_valid_graph():
    g = Graph([Node(0, InputNode())], [])
    with pytest.raises(InvalidGraph):
        to_dot(g)


def test_box_and_const_labels():
    text = to_dot(examples.zne_graph())
    assert "Box:\\ make_list(3)" in text or "make_list" in text
    assert "zne_fold" in text
