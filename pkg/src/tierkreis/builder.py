"""Convenience builder for assembling graphs port by port.

Output ports may be used any number of times; ``build()`` normalizes the
fan-out through copy nodes and validates the result.
"""

from __future__ import annotations

from typing import Optional

from .graph import (BoxNode, ConstNode, Edge, FunctionNode, Graph, InputNode,
                    InvalidGraph, MatchNode, Node, OutputNode, TagNode,
                    insert_copies, validate_graph)
from .values import value_of


class OutPort:
    """Handle to a node's output port, usable as an edge source."""

    __slots__ = ("node_id", "port")

    def __init__(self, node_id: int, port: str):
        self.node_id = node_id
        self.port = port

    def __repr__(self) -> str:
        return f"OutPort({self.node_id}, {self.port!r})"


class NodeRef:
    """Handle to a built node; index by output port name."""

    __slots__ = ("builder", "node_id")

    def __init__(self, builder: "GraphBuilder", node_id: int):
        self.builder = builder
        self.node_id = node_id

    def __getitem__(self, port: str) -> OutPort:
        return OutPort(self.node_id, port)

    @property
    def value(self) -> OutPort:
        return OutPort(self.node_id, "value")


class GraphBuilder:
    def __init__(self, name: Optional[str] = None):
        self.name = name
        self._nodes: list[Node] = [Node(0, InputNode()), Node(1, OutputNode())]
        self._edges: list[Edge] = []
        self._next = 2

    def _add(self, kind) -> NodeRef:
        node = Node(self._next, kind)
        self._next += 1
        self._nodes.append(node)
        return NodeRef(self, node.id)

    def _connect(self, src, dst_id: int, dst_port: str) -> None:
        if isinstance(src, NodeRef):
            src = src.value
        if not isinstance(src, OutPort):
            src = self.const(src).value  # lift plain values to constants
        self._edges.append(Edge((src.node_id, src.port), (dst_id, dst_port)))

    def input(self, label: str) -> OutPort:
        """Declare (or reuse) a graph input port."""
        return OutPort(0, label)

    def const(self, value) -> NodeRef:
        return self._add(ConstNode(value_of(value)))

    def fn(self, name: str, **inputs) -> NodeRef:
        ref = self._add(FunctionNode(name))
        for port, src in inputs.items():
            self._connect(src, ref.node_id, port)
        return ref

    def box(self, graph: Graph, label: Optional[str] = None, **inputs) -> NodeRef:
        ref = self._add(BoxNode(graph, label))
        for port, src in inputs.items():
            self._connect(src, ref.node_id, port)
        return ref

    def tag(self, tag: str, value) -> NodeRef:
        ref = self._add(TagNode(tag))
        self._connect(value, ref.node_id, "value")
        return ref

    def match(self, variant, **handlers) -> NodeRef:
        ref = self._add(MatchNode())
        self._connect(variant, ref.node_id, "variant")
        for tag, src in handlers.items():
            self._connect(src, ref.node_id, tag)
        return ref

    def output(self, **ports) -> None:
        for label, src in ports.items():
            self._connect(src, 1, label)

    def build(self) -> Graph:
        g = Graph(self._nodes, self._edges, self.name)
        g = insert_copies(g)
        errs = validate_graph(g)
        if errs:
            raise InvalidGraph(errs)
        return g
