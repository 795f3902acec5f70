"""Canonical JSON codecs for values, graphs, types, and schemes.

Canonical form: object keys sorted, no insignificant whitespace, UTF-8,
nodes sorted by id, edges by (src id, src port), floats as shortest
round-trip decimals with the literals "NaN"/"Infinity"/"-Infinity" for
non-finite values. Equal objects therefore serialize to equal bytes, which
keeps checkpoint hashes stable.
"""

from __future__ import annotations

import json
import math
from typing import Any

from .graph import (BoxNode, ConstNode, Edge, FunctionNode, Graph, InputNode,
                    MatchNode, Node, OutputNode, TagNode)
from .typesys.exprs import (BoolType, FloatType, GraphType, IntType, MapType,
                            PairType, Row, SchemeLacks, SchemePartition,
                            StrType, StructType, TypeExpr, TypeScheme,
                            VariantType, VarType, VecType)
from .values import (BoolValue, FloatValue, GraphValue, IntValue, MapValue,
                     PairValue, StrValue, StructValue, Value, ValueError_,
                     VariantValue, VecValue)


class DecodeError(Exception):
    """Malformed document; ``path`` points into the offending JSON node."""

    def __init__(self, path: str, message: str = ""):
        self.path = path or "/"
        self.message = message
        super().__init__(f"{self.path}: {message}" if message else self.path)


def canonical_bytes(doc: Any) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False, allow_nan=False).encode("utf-8")


def load_json(b: bytes | str):
    try:
        return json.loads(b)
    except json.JSONDecodeError as e:
        raise DecodeError("/", f"not valid JSON: {e.msg}") from None


# -- values -----------------------------------------------------------------

def value_to_json(v: Value) -> dict:
    if isinstance(v, BoolValue):
        return {"bool": v.value}
    if isinstance(v, IntValue):
        return {"int": v.value}
    if isinstance(v, FloatValue):
        f = v.value
        if math.isnan(f):
            return {"float": "NaN"}
        if math.isinf(f):
            return {"float": "Infinity" if f > 0 else "-Infinity"}
        return {"float": f}
    if isinstance(v, StrValue):
        return {"str": v.value}
    if isinstance(v, PairValue):
        return {"pair": {"first": value_to_json(v.first), "second": value_to_json(v.second)}}
    if isinstance(v, VecValue):
        return {"vec": [value_to_json(x) for x in v.items]}
    if isinstance(v, MapValue):
        return {"map": [[value_to_json(k), value_to_json(x)] for k, x in v.entries]}
    if isinstance(v, StructValue):
        return {"struct": {l: value_to_json(x) for l, x in v.fields}}
    if isinstance(v, VariantValue):
        return {"variant": {"tag": v.tag, "value": value_to_json(v.value)}}
    if isinstance(v, GraphValue):
        return {"graph": graph_to_json(v.graph)}
    raise TypeError(f"not a value: {v!r}")


def _expect_obj(doc, path: str, what: str = "object") -> dict:
    if not isinstance(doc, dict):
        raise DecodeError(path, f"expected {what}, got {type(doc).__name__}")
    return doc


def _one_key(doc: dict, path: str, kinds: str) -> str:
    if len(doc) != 1:
        raise DecodeError(path, f"expected exactly one {kinds} key, got {sorted(doc)}")
    return next(iter(doc))


def value_from_json(doc, path: str = "") -> Value:
    obj = _expect_obj(doc, path, "value object")
    key = _one_key(obj, path, "value-kind")
    body = obj[key]
    p = f"{path}/{key}"
    try:
        if key == "bool":
            if not isinstance(body, bool):
                raise DecodeError(p, "expected a boolean")
            return BoolValue(body)
        if key == "int":
            if isinstance(body, bool) or not isinstance(body, int):
                raise DecodeError(p, "expected an integer")
            return IntValue(body)
        if key == "float":
            if isinstance(body, str):
                if body == "NaN":
                    return FloatValue(math.nan)
                if body == "Infinity":
                    return FloatValue(math.inf)
                if body == "-Infinity":
                    return FloatValue(-math.inf)
                raise DecodeError(p, f"bad float literal {body!r}")
            if isinstance(body, bool) or not isinstance(body, (int, float)):
                raise DecodeError(p, "expected a number")
            return FloatValue(float(body))
        if key == "str":
            if not isinstance(body, str):
                raise DecodeError(p, "expected a string")
            return StrValue(body)
        if key == "pair":
            b = _expect_obj(body, p)
            if set(b) != {"first", "second"}:
                raise DecodeError(p, "pair needs exactly 'first' and 'second'")
            return PairValue(value_from_json(b["first"], f"{p}/first"),
                             value_from_json(b["second"], f"{p}/second"))
        if key == "vec":
            if not isinstance(body, list):
                raise DecodeError(p, "expected an array")
            return VecValue(value_from_json(x, f"{p}/{i}") for i, x in enumerate(body))
        if key == "map":
            if not isinstance(body, list):
                raise DecodeError(p, "expected an array of [key, value] pairs")
            entries = []
            for i, kv in enumerate(body):
                if not isinstance(kv, list) or len(kv) != 2:
                    raise DecodeError(f"{p}/{i}", "expected a [key, value] pair")
                entries.append((value_from_json(kv[0], f"{p}/{i}/0"),
                                value_from_json(kv[1], f"{p}/{i}/1")))
            return MapValue(entries)
        if key == "struct":
            b = _expect_obj(body, p)
            return StructValue({l: value_from_json(x, f"{p}/{l}") for l, x in b.items()})
        if key == "variant":
            b = _expect_obj(body, p)
            if set(b) != {"tag", "value"}:
                raise DecodeError(p, "variant needs exactly 'tag' and 'value'")
            if not isinstance(b["tag"], str):
                raise DecodeError(f"{p}/tag", "expected a string")
            return VariantValue(b["tag"], value_from_json(b["value"], f"{p}/value"))
        if key == "graph":
            return GraphValue(graph_from_json(body, p))
    except ValueError_ as e:
        raise DecodeError(p, str(e)) from None
    raise DecodeError(path, f"unknown value kind {key!r}")


def serialize_value(v: Value) -> bytes:
    return canonical_bytes(value_to_json(v))


def deserialize_value(b: bytes | str) -> Value:
    return value_from_json(load_json(b))


# -- types --------------------------------------------------------------------

def type_to_json(t: TypeExpr) -> dict:
    if isinstance(t, BoolType):
        return {"bool": {}}
    if isinstance(t, IntType):
        return {"int": {}}
    if isinstance(t, FloatType):
        return {"float": {}}
    if isinstance(t, StrType):
        return {"str": {}}
    if isinstance(t, PairType):
        return {"pair": {"first": type_to_json(t.first), "second": type_to_json(t.second)}}
    if isinstance(t, VecType):
        return {"vec": type_to_json(t.item)}
    if isinstance(t, MapType):
        return {"map": {"key": type_to_json(t.key), "value": type_to_json(t.value)}}
    if isinstance(t, StructType):
        return {"struct": row_to_json(t.row)}
    if isinstance(t, VariantType):
        return {"variant": row_to_json(t.row)}
    if isinstance(t, GraphType):
        return {"graph": {"inputs": row_to_json(t.inputs), "outputs": row_to_json(t.outputs)}}
    if isinstance(t, VarType):
        return {"var": t.id}
    raise TypeError(f"not a type expression: {t!r}")


def row_to_json(r: Row) -> dict:
    return {"entries": {l: type_to_json(t) for l, t in r.entries},
            "rest": None if r.rest is None else {"var": r.rest}}


def type_from_json(doc, path: str = "") -> TypeExpr:
    obj = _expect_obj(doc, path, "type object")
    key = _one_key(obj, path, "type-kind")
    body = obj[key]
    p = f"{path}/{key}"
    if key == "bool":
        return BoolType()
    if key == "int":
        return IntType()
    if key == "float":
        return FloatType()
    if key == "str":
        return StrType()
    if key == "pair":
        b = _expect_obj(body, p)
        if set(b) != {"first", "second"}:
            raise DecodeError(p, "pair type needs 'first' and 'second'")
        return PairType(type_from_json(b["first"], f"{p}/first"),
                        type_from_json(b["second"], f"{p}/second"))
    if key == "vec":
        return VecType(type_from_json(body, p))
    if key == "map":
        b = _expect_obj(body, p)
        if set(b) != {"key", "value"}:
            raise DecodeError(p, "map type needs 'key' and 'value'")
        return MapType(type_from_json(b["key"], f"{p}/key"),
                       type_from_json(b["value"], f"{p}/value"))
    if key == "struct":
        return StructType(row_from_json(body, p))
    if key == "variant":
        return VariantType(row_from_json(body, p))
    if key == "graph":
        b = _expect_obj(body, p)
        if set(b) != {"inputs", "outputs"}:
            raise DecodeError(p, "graph type needs 'inputs' and 'outputs'")
        return GraphType(row_from_json(b["inputs"], f"{p}/inputs"),
                         row_from_json(b["outputs"], f"{p}/outputs"))
    if key == "var":
        if isinstance(body, bool) or not isinstance(body, int):
            raise DecodeError(p, "expected a variable id")
        return VarType(body)
    raise DecodeError(path, f"unknown type kind {key!r}")


def row_from_json(doc, path: str = "") -> Row:
    obj = _expect_obj(doc, path, "row object")
    if set(obj) != {"entries", "rest"}:
        raise DecodeError(path, "row needs exactly 'entries' and 'rest'")
    entries = _expect_obj(obj["entries"], f"{path}/entries")
    rest = obj["rest"]
    rest_id = None
    if rest is not None:
        r = _expect_obj(rest, f"{path}/rest")
        if set(r) != {"var"} or isinstance(r["var"], bool) or not isinstance(r["var"], int):
            raise DecodeError(f"{path}/rest", "expected null or a row variable")
        rest_id = r["var"]
    try:
        return Row({l: type_from_json(t, f"{path}/entries/{l}") for l, t in entries.items()},
                   rest_id)
    except ValueError as e:
        raise DecodeError(f"{path}/entries", str(e)) from None


def scheme_to_json(s: TypeScheme) -> dict:
    constraints = []
    for c in s.constraints:
        if isinstance(c, SchemeLacks):
            constraints.append({"lacks": {"row": c.row, "label": c.label}})
        elif isinstance(c, SchemePartition):
            constraints.append({"partition": {"a": row_to_json(c.a), "b": row_to_json(c.b),
                                              "whole": row_to_json(c.whole)}})
    return {"forall": [[k, v] for k, v in s.quantified],
            "constraints": constraints,
            "inputs": row_to_json(s.inputs),
            "outputs": row_to_json(s.outputs)}


def scheme_from_json(doc, path: str = "") -> TypeScheme:
    obj = _expect_obj(doc, path, "scheme object")
    for k in ("forall", "constraints", "inputs", "outputs"):
        if k not in obj:
            raise DecodeError(f"{path}/{k}", "missing")
    quant = []
    if not isinstance(obj["forall"], list):
        raise DecodeError(f"{path}/forall", "expected an array")
    for i, q in enumerate(obj["forall"]):
        if (not isinstance(q, list) or len(q) != 2 or q[0] not in ("t", "r")
                or isinstance(q[1], bool) or not isinstance(q[1], int)):
            raise DecodeError(f"{path}/forall/{i}", "expected [\"t\"|\"r\", id]")
        quant.append((q[0], q[1]))
    cons = []
    if not isinstance(obj["constraints"], list):
        raise DecodeError(f"{path}/constraints", "expected an array")
    for i, c in enumerate(obj["constraints"]):
        cp = f"{path}/constraints/{i}"
        c = _expect_obj(c, cp)
        key = _one_key(c, cp, "constraint")
        if key == "lacks":
            b = _expect_obj(c["lacks"], f"{cp}/lacks")
            if set(b) != {"row", "label"}:
                raise DecodeError(f"{cp}/lacks", "needs 'row' and 'label'")
            cons.append(SchemeLacks(b["row"], b["label"]))
        elif key == "partition":
            b = _expect_obj(c["partition"], f"{cp}/partition")
            if set(b) != {"a", "b", "whole"}:
                raise DecodeError(f"{cp}/partition", "needs 'a', 'b', 'whole'")
            cons.append(SchemePartition(row_from_json(b["a"], f"{cp}/partition/a"),
                                        row_from_json(b["b"], f"{cp}/partition/b"),
                                        row_from_json(b["whole"], f"{cp}/partition/whole")))
        else:
            raise DecodeError(cp, f"unknown constraint kind {key!r}")
    return TypeScheme(quant, cons,
                      row_from_json(obj["inputs"], f"{path}/inputs"),
                      row_from_json(obj["outputs"], f"{path}/outputs"))


# -- graphs -------------------------------------------------------------------

def _kind_to_json(kind) -> dict:
    if isinstance(kind, InputNode):
        return {"input": {}}
    if isinstance(kind, OutputNode):
        return {"output": {}}
    if isinstance(kind, ConstNode):
        return {"const": {"value": value_to_json(kind.value)}}
    if isinstance(kind, FunctionNode):
        return {"function": {"name": kind.name}}
    if isinstance(kind, BoxNode):
        body = {"graph": graph_to_json(kind.graph)}
        if kind.label is not None:
            body["label"] = kind.label
        return {"box": body}
    if isinstance(kind, MatchNode):
        return {"match": {}}
    if isinstance(kind, TagNode):
        return {"tag": {"tag": kind.tag}}
    raise TypeError(f"not a node kind: {kind!r}")


def graph_to_json(g: Graph) -> dict:
    doc: dict = {
        "nodes": [{"id": n.id, "kind": _kind_to_json(n.kind)} for n in g.nodes],
        "edges": [_edge_to_json(e) for e in g.edges],
    }
    if g.name is not None:
        doc["name"] = g.name
    return doc


def _edge_to_json(e: Edge) -> dict:
    doc: dict = {"src": [e.src[0], e.src[1]], "dst": [e.dst[0], e.dst[1]]}
    if e.ty is not None:
        doc["type"] = type_to_json(e.ty)
    return doc


def _endpoint_from_json(doc, path: str) -> tuple[int, str]:
    if (not isinstance(doc, list) or len(doc) != 2 or isinstance(doc[0], bool)
            or not isinstance(doc[0], int) or not isinstance(doc[1], str)):
        raise DecodeError(path, "expected [node id, port name]")
    return (doc[0], doc[1])


def _kind_from_json(doc, path: str):
    obj = _expect_obj(doc, path, "node kind")
    key = _one_key(obj, path, "node-kind")
    body = obj[key]
    p = f"{path}/{key}"
    if key == "input":
        return InputNode()
    if key == "output":
        return OutputNode()
    if key == "const":
        b = _expect_obj(body, p)
        if "value" not in b:
            raise DecodeError(f"{p}/value", "missing")
        return ConstNode(value_from_json(b["value"], f"{p}/value"))
    if key == "function":
        b = _expect_obj(body, p)
        if set(b) != {"name"} or not isinstance(b["name"], str):
            raise DecodeError(f"{p}/name", "expected a function name string")
        return FunctionNode(b["name"])
    if key == "box":
        b = _expect_obj(body, p)
        if "graph" not in b:
            raise DecodeError(f"{p}/graph", "missing")
        label = b.get("label")
        if label is not None and not isinstance(label, str):
            raise DecodeError(f"{p}/label", "expected a string")
        return BoxNode(graph_from_json(b["graph"], f"{p}/graph"), label)
    if key == "match":
        return MatchNode()
    if key == "tag":
        b = _expect_obj(body, p)
        if set(b) != {"tag"} or not isinstance(b["tag"], str):
            raise DecodeError(f"{p}/tag", "expected a tag string")
        return TagNode(b["tag"])
    raise DecodeError(path, f"unknown node kind {key!r}")


def graph_from_json(doc, path: str = "") -> Graph:
    obj = _expect_obj(doc, path, "graph object")
    if "nodes" not in obj or not isinstance(obj["nodes"], list):
        raise DecodeError(f"{path}/nodes", "expected an array of nodes")
    if "edges" not in obj or not isinstance(obj["edges"], list):
        raise DecodeError(f"{path}/edges", "expected an array of edges")
    name = obj.get("name")
    if name is not None and not isinstance(name, str):
        raise DecodeError(f"{path}/name", "expected a string")
    nodes = []
    for i, n in enumerate(obj["nodes"]):
        np = f"{path}/nodes/{i}"
        n = _expect_obj(n, np, "node")
        if "id" not in n or isinstance(n["id"], bool) or not isinstance(n["id"], int):
            raise DecodeError(f"{np}/id", "expected an integer id")
        if "kind" not in n:
            raise DecodeError(f"{np}/kind", "missing")
        nodes.append(Node(n["id"], _kind_from_json(n["kind"], f"{np}/kind")))
    edges = []
    for i, e in enumerate(obj["edges"]):
        ep = f"{path}/edges/{i}"
        e = _expect_obj(e, ep, "edge")
        if "src" not in e or "dst" not in e:
            raise DecodeError(ep, "edge needs 'src' and 'dst'")
        ty = None
        if e.get("type") is not None:
            ty = type_from_json(e["type"], f"{ep}/type")
        edges.append(Edge(_endpoint_from_json(e["src"], f"{ep}/src"),
                          _endpoint_from_json(e["dst"], f"{ep}/dst"), ty))
    return Graph(nodes, edges, name)


def serialize_graph(g: Graph) -> bytes:
    return canonical_bytes(graph_to_json(g))


def deserialize_graph(b: bytes | str) -> Graph:
    return graph_from_json(load_json(b))
