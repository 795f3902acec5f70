"""Wire types and value codec, implemented against the protocol documents.

This module is deliberately independent of the runtime's own codebase: the
wire format is the contract. Canonical JSON everywhere (sorted keys, no
extra whitespace, UTF-8, shortest float repr, "NaN"/"Infinity"/"-Infinity"
literals), map entries ordered by a structural key order.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import Any, Optional, Union


class WireError(Exception):
    """Malformed wire document or a value that does not fit its type."""

    def __init__(self, path, message):
        self.path = path or "/"
        super().__init__(f"{self.path}: {message}")


def canon(doc) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False, allow_nan=False).encode("utf-8")


# -- type syntax ------------------------------------------------------------------

@dataclass(frozen=True)
class TBool:
    pass


@dataclass(frozen=True)
class TInt:
    pass


@dataclass(frozen=True)
class TFloat:
    pass


@dataclass(frozen=True)
class TStr:
    pass


@dataclass(frozen=True)
class TPair:
    first: "Type"
    second: "Type"


@dataclass(frozen=True)
class TVec:
    item: "Type"


@dataclass(frozen=True)
class TMap:
    key: "Type"
    value: "Type"


@dataclass(frozen=True)
class TStruct:
    row: "RowT"


@dataclass(frozen=True)
class TVariant:
    row: "RowT"


@dataclass(frozen=True)
class TGraph:
    inputs: "RowT"
    outputs: "RowT"


@dataclass(frozen=True)
class TVar:
    id: int


Type = Union[TBool, TInt, TFloat, TStr, TPair, TVec, TMap, TStruct, TVariant,
             TGraph, TVar]


@dataclass(frozen=True)
class RowT:
    entries: tuple[tuple[str, "Type"], ...]
    rest: Optional[int] = None

    @staticmethod
    def of(entries: dict[str, "Type"], rest: Optional[int] = None) -> "RowT":
        return RowT(tuple(sorted(entries.items())), rest)


@dataclass(frozen=True)
class Scheme:
    forall: tuple[tuple[str, int], ...]
    constraints: tuple
    inputs: RowT
    outputs: RowT


def type_to_json(t: Type) -> dict:
    if isinstance(t, TBool):
        return {"bool": {}}
    if isinstance(t, TInt):
        return {"int": {}}
    if isinstance(t, TFloat):
        return {"float": {}}
    if isinstance(t, TStr):
        return {"str": {}}
    if isinstance(t, TPair):
        return {"pair": {"first": type_to_json(t.first), "second": type_to_json(t.second)}}
    if isinstance(t, TVec):
        return {"vec": type_to_json(t.item)}
    if isinstance(t, TMap):
        return {"map": {"key": type_to_json(t.key), "value": type_to_json(t.value)}}
    if isinstance(t, TStruct):
        return {"struct": row_to_json(t.row)}
    if isinstance(t, TVariant):
        return {"variant": row_to_json(t.row)}
    if isinstance(t, TGraph):
        return {"graph": {"inputs": row_to_json(t.inputs), "outputs": row_to_json(t.outputs)}}
    if isinstance(t, TVar):
        return {"var": t.id}
    raise WireError("/", f"not a type: {t!r}")


def row_to_json(r: RowT) -> dict:
    return {"entries": {l: type_to_json(t) for l, t in r.entries},
            "rest": None if r.rest is None else {"var": r.rest}}


def type_from_json(doc, path="") -> Type:
    if not isinstance(doc, dict) or len(doc) != 1:
        raise WireError(path, "expected a single-key type object")
    key, body = next(iter(doc.items()))
    p = f"{path}/{key}"
    simple = {"bool": TBool(), "int": TInt(), "float": TFloat(), "str": TStr()}
    if key in simple:
        return simple[key]
    if key == "pair":
        return TPair(type_from_json(body["first"], f"{p}/first"),
                     type_from_json(body["second"], f"{p}/second"))
    if key == "vec":
        return TVec(type_from_json(body, p))
    if key == "map":
        return TMap(type_from_json(body["key"], f"{p}/key"),
                    type_from_json(body["value"], f"{p}/value"))
    if key == "struct":
        return TStruct(row_from_json(body, p))
    if key == "variant":
        return TVariant(row_from_json(body, p))
    if key == "graph":
        return TGraph(row_from_json(body["inputs"], f"{p}/inputs"),
                      row_from_json(body["outputs"], f"{p}/outputs"))
    if key == "var":
        return TVar(int(body))
    raise WireError(path, f"unknown type kind {key!r}")


def row_from_json(doc, path="") -> RowT:
    if not isinstance(doc, dict) or set(doc) != {"entries", "rest"}:
        raise WireError(path, "expected a row object with entries and rest")
    rest = doc["rest"]
    return RowT(tuple(sorted((l, type_from_json(t, f"{path}/entries/{l}"))
                             for l, t in doc["entries"].items())),
                None if rest is None else int(rest["var"]))


def scheme_to_json(s: Scheme) -> dict:
    return {"forall": [[k, v] for k, v in s.forall],
            "constraints": list(s.constraints),
            "inputs": row_to_json(s.inputs),
            "outputs": row_to_json(s.outputs)}


def scheme_from_json(doc, path="") -> Scheme:
    return Scheme(tuple((k, v) for k, v in doc["forall"]),
                  tuple(doc["constraints"]),
                  row_from_json(doc["inputs"], f"{path}/inputs"),
                  row_from_json(doc["outputs"], f"{path}/outputs"))


# -- opaque and tagged runtime values ----------------------------------------------

@dataclass(frozen=True)
class GraphHandle:
    """First-class graph value, carried opaquely as its wire document."""

    doc: Any

    def __post_init__(self):
        if not isinstance(self.doc, dict):
            raise WireError("/", "a graph handle wraps the graph's JSON object")


@dataclass(frozen=True)
class Tagged:
    """A variant value when no tagged-union annotation is in play."""

    tag: str
    value: Any


# -- untyped value documents ---------------------------------------------------------

_KIND_ORDER = ["bool", "int", "float", "str", "pair", "vec", "map", "struct",
               "variant", "graph"]


def _value_sort_key(doc: dict):
    """Structural order over wire values, matching the runtime's map-key
    order: kind rank, then payload."""
    key = next(iter(doc))
    rank = _KIND_ORDER.index(key)
    body = doc[key]
    if key in ("bool", "int", "str"):
        return (rank, body)
    if key == "pair":
        return (rank, _value_sort_key(body["first"]), _value_sort_key(body["second"]))
    if key == "vec":
        return (rank, tuple(_value_sort_key(x) for x in body))
    if key == "variant":
        return (rank, body["tag"], _value_sort_key(body["value"]))
    raise WireError("/", f"value kind {key!r} cannot be a map key")


def decode_value(doc, t: Type, path=""):
    """Wire document -> Python object shaped by ``t``."""
    if not isinstance(doc, dict) or len(doc) != 1:
        raise WireError(path, "expected a single-key value object")
    key, body = next(iter(doc.items()))
    p = f"{path}/{key}"
    if isinstance(t, TVar):
        return _decode_any(doc, path)
    if isinstance(t, TBool):
        if key != "bool":
            raise WireError(p, "expected a bool")
        return bool(body)
    if isinstance(t, TInt):
        if key != "int":
            raise WireError(p, "expected an int")
        return int(body)
    if isinstance(t, TFloat):
        if key != "float":
            raise WireError(p, "expected a float")
        if body == "NaN":
            return math.nan
        if body == "Infinity":
            return math.inf
        if body == "-Infinity":
            return -math.inf
        return float(body)
    if isinstance(t, TStr):
        if key != "str":
            raise WireError(p, "expected a str")
        return str(body)
    if isinstance(t, TPair):
        if key != "pair":
            raise WireError(p, "expected a pair")
        return (decode_value(body["first"], t.first, f"{p}/first"),
                decode_value(body["second"], t.second, f"{p}/second"))
    if isinstance(t, TVec):
        if key != "vec":
            raise WireError(p, "expected a vec")
        return [decode_value(x, t.item, f"{p}/{i}") for i, x in enumerate(body)]
    if isinstance(t, TMap):
        if key != "map":
            raise WireError(p, "expected a map")
        return {decode_value(k, t.key, f"{p}/{i}/0"): decode_value(v, t.value, f"{p}/{i}/1")
                for i, (k, v) in enumerate(body)}
    if isinstance(t, TStruct):
        if key != "struct":
            raise WireError(p, "expected a struct")
        row = dict(t.row.entries)
        return {l: decode_value(v, row[l], f"{p}/{l}") if l in row else _decode_any(v, p)
                for l, v in body.items()}
    if isinstance(t, TVariant):
        if key != "variant":
            raise WireError(p, "expected a variant")
        row = dict(t.row.entries)
        tag = body["tag"]
        inner_t = row.get(tag)
        inner = (decode_value(body["value"], inner_t, f"{p}/value")
                 if inner_t is not None else _decode_any(body["value"], p))
        return Tagged(tag, inner)
    if isinstance(t, TGraph):
        if key != "graph":
            raise WireError(p, "expected a graph")
        return GraphHandle(body)
    raise WireError(path, f"cannot decode against {t!r}")


def _decode_any(doc, path=""):
    """Best-effort decode with no type to guide it (unconstrained slots)."""
    key, body = next(iter(doc.items()))
    if key == "bool":
        return bool(body)
    if key == "int":
        return int(body)
    if key == "float":
        return decode_value(doc, TFloat(), path)
    if key == "str":
        return str(body)
    if key == "pair":
        return (_decode_any(body["first"]), _decode_any(body["second"]))
    if key == "vec":
        return [_decode_any(x) for x in body]
    if key == "map":
        return {_decode_any(k): _decode_any(v) for k, v in body}
    if key == "struct":
        return {l: _decode_any(v) for l, v in body.items()}
    if key == "variant":
        return Tagged(body["tag"], _decode_any(body["value"]))
    if key == "graph":
        return GraphHandle(body)
    raise WireError(path, f"unknown value kind {key!r}")


def _float_doc(f: float) -> dict:
    if math.isnan(f):
        return {"float": "NaN"}
    if math.isinf(f):
        return {"float": "Infinity" if f > 0 else "-Infinity"}
    return {"float": float(f)}


def encode_value(obj, t: Type, path="") -> dict:
    """Python object -> wire document shaped by ``t``."""
    if isinstance(t, TBool):
        if not isinstance(obj, bool):
            raise WireError(path, f"expected bool, got {type(obj).__name__}")
        return {"bool": obj}
    if isinstance(t, TInt):
        if isinstance(obj, bool) or not isinstance(obj, int):
            raise WireError(path, f"expected int, got {type(obj).__name__}")
        return {"int": obj}
    if isinstance(t, TFloat):
        if isinstance(obj, bool) or not isinstance(obj, (int, float)):
            raise WireError(path, f"expected float, got {type(obj).__name__}")
        return _float_doc(float(obj))
    if isinstance(t, TStr):
        if not isinstance(obj, str):
            raise WireError(path, f"expected str, got {type(obj).__name__}")
        return {"str": obj}
    if isinstance(t, TPair):
        if not isinstance(obj, tuple) or len(obj) != 2:
            raise WireError(path, "expected a 2-tuple")
        return {"pair": {"first": encode_value(obj[0], t.first, f"{path}/first"),
                         "second": encode_value(obj[1], t.second, f"{path}/second")}}
    if isinstance(t, TVec):
        if not isinstance(obj, (list, tuple)):
            raise WireError(path, "expected a list")
        return {"vec": [encode_value(x, t.item, f"{path}/{i}") for i, x in enumerate(obj)]}
    if isinstance(t, TMap):
        if not isinstance(obj, dict):
            raise WireError(path, "expected a dict")
        entries = [[encode_value(k, t.key, f"{path}/key"),
                    encode_value(v, t.value, f"{path}/val")] for k, v in obj.items()]
        entries.sort(key=lambda kv: _value_sort_key(kv[0]))
        return {"map": entries}
    if isinstance(t, TStruct):
        row = dict(t.row.entries)
        if dataclasses.is_dataclass(obj):
            obj = {f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)}
        if not isinstance(obj, dict) or set(obj) != set(row):
            raise WireError(path, f"struct needs fields {sorted(row)}")
        return {"struct": {l: encode_value(v, row[l], f"{path}/{l}")
                           for l, v in obj.items()}}
    if isinstance(t, TVariant):
        row = dict(t.row.entries)
        if isinstance(obj, Tagged):
            tag, inner = obj.tag, obj.value
        elif dataclasses.is_dataclass(obj) and type(obj).__name__ in row:
            tag, inner = type(obj).__name__, obj
        else:
            raise WireError(path, f"cannot tag {type(obj).__name__} into {sorted(row)}")
        if tag not in row and t.row.rest is None:
            raise WireError(path, f"tag {tag!r} not among {sorted(row)}")
        inner_t = row.get(tag)
        inner_doc = (encode_value(inner, inner_t, f"{path}/{tag}")
                     if inner_t is not None else _encode_any(inner, f"{path}/{tag}"))
        return {"variant": {"tag": tag, "value": inner_doc}}
    if isinstance(t, TGraph):
        if not isinstance(obj, GraphHandle):
            raise WireError(path, "expected a GraphHandle")
        return {"graph": obj.doc}
    if isinstance(t, TVar):
        return _encode_any(obj, path)
    raise WireError(path, f"cannot encode against {t!r}")


def _encode_any(obj, path="") -> dict:
    if isinstance(obj, bool):
        return {"bool": obj}
    if isinstance(obj, int):
        return {"int": obj}
    if isinstance(obj, float):
        return _float_doc(obj)
    if isinstance(obj, str):
        return {"str": obj}
    if isinstance(obj, tuple) and len(obj) == 2:
        return {"pair": {"first": _encode_any(obj[0]), "second": _encode_any(obj[1])}}
    if isinstance(obj, (list,)):
        return {"vec": [_encode_any(x) for x in obj]}
    if isinstance(obj, dict):
        entries = [[_encode_any(k), _encode_any(v)] for k, v in obj.items()]
        entries.sort(key=lambda kv: _value_sort_key(kv[0]))
        return {"map": entries}
    if isinstance(obj, Tagged):
        return {"variant": {"tag": obj.tag, "value": _encode_any(obj.value)}}
    if isinstance(obj, GraphHandle):
        return {"graph": obj.doc}
    if dataclasses.is_dataclass(obj):
        return {"struct": {f.name: _encode_any(getattr(obj, f.name))
                           for f in dataclasses.fields(obj)}}
    raise WireError(path, f"cannot encode {type(obj).__name__} without a type")


def reencode(doc, path="") -> dict:
    """Decode-and-re-encode of an arbitrary value document (conformance)."""
    key = next(iter(doc))
    t = {"bool": TBool(), "int": TInt(), "float": TFloat(), "str": TStr()}.get(key)
    if t is not None:
        return encode_value(decode_value(doc, t, path), t, path)
    if key == "pair":
        return {"pair": {"first": reencode(doc["pair"]["first"]),
                         "second": reencode(doc["pair"]["second"])}}
    if key == "vec":
        return {"vec": [reencode(x) for x in doc["vec"]]}
    if key == "map":
        return {"map": [[reencode(k), reencode(v)] for k, v in doc["map"]]}
    if key == "struct":
        return {"struct": {l: reencode(v) for l, v in doc["struct"].items()}}
    if key == "variant":
        return {"variant": {"tag": doc["variant"]["tag"],
                            "value": reencode(doc["variant"]["value"])}}
    if key == "graph":
        return {"graph": reencode_graph(doc["graph"])}
    raise WireError(path, f"unknown value kind {key!r}")


def reencode_graph(gdoc) -> dict:
    out = {"nodes": [], "edges": []}
    if "name" in gdoc:
        out["name"] = gdoc["name"]
    for n in gdoc["nodes"]:
        kind = n["kind"]
        key = next(iter(kind))
        if key == "const":
            kind = {"const": {"value": reencode(kind["const"]["value"])}}
        elif key == "box":
            body = {"graph": reencode_graph(kind["box"]["graph"])}
            if "label" in kind["box"]:
                body["label"] = kind["box"]["label"]
            kind = {"box": body}
        out["nodes"].append({"id": n["id"], "kind": kind})
    for e in gdoc["edges"]:
        edge = {"src": list(e["src"]), "dst": list(e["dst"])}
        if e.get("type") is not None:
            edge["type"] = type_to_json(type_from_json(e["type"]))
        out["edges"].append(edge)
    return out
