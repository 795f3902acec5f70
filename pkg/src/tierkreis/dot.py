"""Graphviz DOT export with ports rendered as record fields."""

from __future__ import annotations

from .graph import (BoxNode, ConstNode, FunctionNode, Graph, InputNode,
                    InvalidGraph, MatchNode, OutputNode, TagNode,
                    const_value_summary, validate_graph)
from .typesys.exprs import render_type


def _esc(text: str) -> str:
    out = []
    for ch in text:
        if ch in '{}|<>"\\ ':
            out.append("\\" + ch)
        elif ch == "\n":
            out.append("\\n")
        else:
            out.append(ch)
    return "".join(out)


def _record(in_ports: list[str], title: str, out_ports: list[str]) -> str:
    def cells(ports: list[str]) -> str:
        return "{" + "|".join(f"<{p}>{_esc(p)}" for p in ports) + "}"

    parts = []
    if in_ports:
        parts.append(cells(in_ports))
    parts.append(_esc(title))
    if out_ports:
        parts.append(cells(out_ports))
    return "{" + "|".join(parts) + "}"


def to_dot(g: Graph, annotated: bool = False) -> str:
    """DOT text for a valid graph; with ``annotated``, edges carry their
    inferred/declared type annotation as a label."""
    errs = validate_graph(g)
    if errs:
        raise InvalidGraph(errs)

    lines = ["digraph {", "  rankdir=TB;", "  node [shape=record];"]
    for n in g.nodes:
        in_ports = sorted({e.dst[1] for e in g.in_edges(n.id)})
        out_ports = sorted({e.src[1] for e in g.out_edges(n.id)})
        kind = n.kind
        if isinstance(kind, InputNode):
            label = _record([], "Input", out_ports)
        elif isinstance(kind, OutputNode):
            label = _record(in_ports, "Output", [])
        elif isinstance(kind, ConstNode):
            label = _record([], f"Const {const_value_summary(kind.value)}", out_ports)
        elif isinstance(kind, FunctionNode):
            label = _record(in_ports, kind.name.split("/", 1)[-1], out_ports)
        elif isinstance(kind, BoxNode):
            title = f"Box: {kind.label}" if kind.label else "Box"
            label = _record(in_ports, title, out_ports)
        elif isinstance(kind, MatchNode):
            label = _record(in_ports, "Match", out_ports)
        elif isinstance(kind, TagNode):
            label = _record(in_ports, f"Tag {kind.tag}", out_ports)
        else:
            label = _record(in_ports, "?", out_ports)
        lines.append(f'  n{n.id} [label="{label}"];')
    for e in g.edges:
        attr = ""
        if annotated and e.ty is not None:
            attr = f' [label="{_esc(render_type(e.ty))}"]'
        lines.append(f'  n{e.src[0]}:{e.src[1]} -> n{e.dst[0]}:{e.dst[1]}{attr};')
    lines.append("}")
    return "\n".join(lines) + "\n"
