"""The built-in worker: host-implemented pure functions plus the schemes of
the executor-handled controls (eval, loop).

All functions live under the ``builtin`` namespace. Integer arithmetic wraps
on 64-bit two's-complement overflow. Host functions are pure, reentrant, and
idempotent by construction.
"""

from __future__ import annotations

import math

from .graph import (BoxNode, ConstNode, Edge, Graph, InputNode, Node,
                    OutputNode)
from .signatures import FunctionDecl, SignatureIndex, index_of
from .typesys.exprs import (BOOL, FLOAT, INT, GraphType, MapType, PairType,
                            Row, SchemeLacks, SchemePartition, StructType,
                            TypeScheme, VariantType, VarType, VecType)
from .values import (BoolValue, FloatValue, GraphValue, IntValue, MapValue,
                     PairValue, StructValue, Value, VecValue, kind_name)


class HostFnError(Exception):
    """A builtin failed; ``kind`` is the stable error name on the wire."""

    def __init__(self, kind: str, message: str):
        self.kind = kind
        self.message = message
        super().__init__(f"{kind}: {message}")


_I64_MIN, _I64_MAX = -(1 << 63), (1 << 63) - 1


def _wrap64(x: int) -> int:
    return ((x - _I64_MIN) % (1 << 64)) + _I64_MIN


def _float(v: Value, port: str) -> float:
    if not isinstance(v, FloatValue):
        raise HostFnError("FunctionFailed", f"port {port!r}: expected float, got {kind_name(v)}")
    return v.value


def _int(v: Value, port: str) -> int:
    if not isinstance(v, IntValue):
        raise HostFnError("FunctionFailed", f"port {port!r}: expected int, got {kind_name(v)}")
    return v.value


def _bool(v: Value, port: str) -> bool:
    if not isinstance(v, BoolValue):
        raise HostFnError("FunctionFailed", f"port {port!r}: expected bool, got {kind_name(v)}")
    return v.value


def _graph(v: Value, port: str) -> Graph:
    if not isinstance(v, GraphValue):
        raise HostFnError("FunctionFailed", f"port {port!r}: expected graph, got {kind_name(v)}")
    return v.graph


# -- graph surgery ------------------------------------------------------------

def partial_apply(g: Graph, supplied: dict[str, Value]) -> Graph:
    """Plug values into a graph's input ports as constants.

    The result takes the remaining inputs; unknown labels are an error.
    """
    in_id = g.input_node().id
    by_label = {e.src[1]: e for e in g.out_edges(in_id)}
    for label in supplied:
        if label not in by_label:
            raise HostFnError("UnknownPort",
                              f"graph has no input port {label!r} "
                              f"(has {sorted(by_label)})")
    next_id = max(n.id for n in g.nodes) + 1
    nodes = list(g.nodes)
    edges = [e for e in g.edges if not (e.src[0] == in_id and e.src[1] in supplied)]
    for label in sorted(supplied):
        old = by_label[label]
        const = Node(next_id, ConstNode(supplied[label]))
        next_id += 1
        nodes.append(const)
        edges.append(Edge((const.id, "value"), old.dst, old.ty))
    return Graph(nodes, edges, g.name)


def parallel_compose(a: Graph, b: Graph) -> Graph:
    """Side-by-side composition of two graphs with disjoint port sets."""
    a_in, a_out = a.input_ports(), a.output_ports()
    b_in, b_out = b.input_ports(), b.output_ports()
    dup = sorted(set(a_in) & set(b_in)) + sorted(set(a_out) & set(b_out))
    if dup:
        raise HostFnError("FunctionFailed",
                          f"parallel requires disjoint ports; shared: {dup}")
    nodes = [Node(0, InputNode()), Node(1, OutputNode()),
             Node(2, BoxNode(a, a.name)), Node(3, BoxNode(b, b.name))]
    edges = []
    for box_id, ins, outs in ((2, a_in, a_out), (3, b_in, b_out)):
        for p in ins:
            edges.append(Edge((0, p), (box_id, p)))
        for p in outs:
            edges.append(Edge((box_id, p), (1, p)))
    return Graph(nodes, edges)


# -- host implementations ------------------------------------------------------

def _fsub(i):
    return {"value": FloatValue(_float(i["a"], "a") - _float(i["b"], "b"))}


def _fadd(i):
    return {"value": FloatValue(_float(i["a"], "a") + _float(i["b"], "b"))}


def _fmul(i):
    return {"value": FloatValue(_float(i["a"], "a") * _float(i["b"], "b"))}


def _fdiv(i):
    a, b = _float(i["a"], "a"), _float(i["b"], "b")
    if b == 0.0:
        # binary64 semantics: signed infinity / NaN, not an error
        return {"value": FloatValue(math.inf if a > 0 else -math.inf if a < 0 else math.nan)}
    return {"value": FloatValue(a / b)}


def _fpow(i):
    try:
        return {"value": FloatValue(float(_float(i["a"], "a") ** _float(i["b"], "b")))}
    except (OverflowError, ValueError):
        return {"value": FloatValue(math.nan)}


def _fneg(i):
    return {"value": FloatValue(-_float(i["value"], "value"))}


def _flt(i):
    return {"value": BoolValue(_float(i["a"], "a") < _float(i["b"], "b"))}


def _fgt(i):
    return {"value": BoolValue(_float(i["a"], "a") > _float(i["b"], "b"))}


def _feq_approx(i):
    return {"value": BoolValue(
        abs(_float(i["a"], "a") - _float(i["b"], "b")) <= _float(i["eps"], "eps"))}


def _iadd(i):
    return {"value": IntValue(_wrap64(_int(i["a"], "a") + _int(i["b"], "b")))}


def _isub(i):
    return {"value": IntValue(_wrap64(_int(i["a"], "a") - _int(i["b"], "b")))}


def _imul(i):
    return {"value": IntValue(_wrap64(_int(i["a"], "a") * _int(i["b"], "b")))}


def _idiv_checked(i):
    a, b = _int(i["a"], "a"), _int(i["b"], "b")
    if b == 0:
        raise HostFnError("DivByZero", "integer division by zero")
    q = a // b
    if a % b != 0 and (a < 0) != (b < 0):
        q += 1  # truncate toward zero
    return {"value": IntValue(_wrap64(q))}


def _ilt(i):
    return {"value": BoolValue(_int(i["a"], "a") < _int(i["b"], "b"))}


def _int_to_float(i):
    return {"value": FloatValue(float(_int(i["value"], "value")))}


def _and(i):
    return {"value": BoolValue(_bool(i["a"], "a") and _bool(i["b"], "b"))}


def _or(i):
    return {"value": BoolValue(_bool(i["a"], "a") or _bool(i["b"], "b"))}


def _not(i):
    return {"value": BoolValue(not _bool(i["value"], "value"))}


def _switch(i):
    return {"value": i["if_true"] if _bool(i["pred"], "pred") else i["if_false"]}


def _push(i):
    vec = i["vec"]
    if not isinstance(vec, VecValue):
        raise HostFnError("FunctionFailed", f"port 'vec': expected vec, got {kind_name(vec)}")
    return {"vec": VecValue((*vec.items, i["item"]))}


def _pop(i):
    vec = i["vec"]
    if not isinstance(vec, VecValue):
        raise HostFnError("FunctionFailed", f"port 'vec': expected vec, got {kind_name(vec)}")
    if not vec.items:
        raise HostFnError("EmptyVec", "pop on an empty vector")
    return {"vec": VecValue(vec.items[:-1]), "item": vec.items[-1]}


def _make_pair(i):
    return {"pair": PairValue(i["first"], i["second"])}


def _unpack_pair(i):
    p = i["pair"]
    if not isinstance(p, PairValue):
        raise HostFnError("FunctionFailed", f"port 'pair': expected pair, got {kind_name(p)}")
    return {"first": p.first, "second": p.second}


def _make_struct(i):
    return {"struct": StructValue(i)}


def _unpack_struct(i):
    s = i["struct"]
    if not isinstance(s, StructValue):
        raise HostFnError("FunctionFailed", f"port 'struct': expected struct, got {kind_name(s)}")
    return dict(s.fields)


def _insert_map(i):
    m = i["map"]
    if not isinstance(m, MapValue):
        raise HostFnError("FunctionFailed", f"port 'map': expected map, got {kind_name(m)}")
    entries = [(k, v) for k, v in m.entries if k != i["key"]]
    entries.append((i["key"], i["value"]))
    return {"map": MapValue(entries)}


def _remove_map(i):
    m = i["map"]
    if not isinstance(m, MapValue):
        raise HostFnError("FunctionFailed", f"port 'map': expected map, got {kind_name(m)}")
    found = m.get(i["key"])
    if found is None:
        raise HostFnError("MissingKey", "remove_map: key not present")
    return {"map": MapValue((k, v) for k, v in m.entries if k != i["key"]),
            "value": found}


def _copy(i):
    return {"value_0": i["value"], "value_1": i["value"]}


def _discard(i):
    return {}


def _id(i):
    return {"value": i["value"]}


def _partial(i):
    thunk = _graph(i["thunk"], "thunk")
    supplied = {k: v for k, v in i.items() if k != "thunk"}
    return {"value": GraphValue(partial_apply(thunk, supplied))}


def _parallel(i):
    return {"value": GraphValue(parallel_compose(_graph(i["a"], "a"), _graph(i["b"], "b")))}


# -- schemes -------------------------------------------------------------------

def _mono(ins: dict, outs: dict) -> TypeScheme:
    return TypeScheme((), (), Row.closed(ins), Row.closed(outs))


def _poly(quant, constraints, ins: Row, outs: Row) -> TypeScheme:
    return TypeScheme(quant, constraints, ins, outs)


_A, _B = VarType(0), VarType(1)

_EVAL_SCHEME = _poly(
    (("r", 0), ("r", 1)), (SchemeLacks(0, "thunk"),),
    Row.open({"thunk": GraphType(Row.var(0), Row.var(1))}, 0),
    Row.var(1))

_PARTIAL_SCHEME = _poly(
    (("r", 0), ("r", 1), ("r", 2), ("r", 3)),
    (SchemeLacks(1, "thunk"), SchemePartition(Row.var(1), Row.var(2), Row.var(0))),
    Row.open({"thunk": GraphType(Row.var(0), Row.var(3))}, 1),
    Row.closed({"value": GraphType(Row.var(2), Row.var(3))}))

_LOOP_SCHEME = _poly(
    (("t", 0), ("t", 1)), (),
    Row.closed({
        "body": GraphType(
            Row.closed({"value": _A}),
            Row.closed({"value": VariantType(Row.closed({"continue": _A, "break": _B}))})),
        "value": _A,
    }),
    Row.closed({"value": _B}))

_PARALLEL_SCHEME = _poly(
    (("r", 0), ("r", 1), ("r", 2), ("r", 3), ("r", 4), ("r", 5)),
    (SchemePartition(Row.var(1), Row.var(2), Row.var(0)),
     SchemePartition(Row.var(4), Row.var(5), Row.var(3))),
    Row.closed({"a": GraphType(Row.var(1), Row.var(4)),
                "b": GraphType(Row.var(2), Row.var(5))}),
    Row.closed({"value": GraphType(Row.var(0), Row.var(3))}))

_SWITCH_SCHEME = _poly((("t", 0),), (),
                       Row.closed({"pred": BOOL, "if_true": _A, "if_false": _A}),
                       Row.closed({"value": _A}))

_MAKE_STRUCT_SCHEME = _poly((("r", 0),), (), Row.var(0),
                            Row.closed({"struct": StructType(Row.var(0))}))

_UNPACK_STRUCT_SCHEME = _poly((("r", 0),), (),
                              Row.closed({"struct": StructType(Row.var(0))}),
                              Row.var(0))

_FF_FF = _mono({"a": FLOAT, "b": FLOAT}, {"value": FLOAT})
_FF_FB = _mono({"a": FLOAT, "b": FLOAT}, {"value": BOOL})
_II_II = _mono({"a": INT, "b": INT}, {"value": INT})
_II_IB = _mono({"a": INT, "b": INT}, {"value": BOOL})
_BB_B = _mono({"a": BOOL, "b": BOOL}, {"value": BOOL})


def _decls() -> list[FunctionDecl]:
    def d(fname: str, scheme: TypeScheme, impl) -> FunctionDecl:
        return FunctionDecl(f"builtin/{fname}", scheme, impl, idempotent=True)

    return [
        d("eval", _EVAL_SCHEME, None),
        d("loop", _LOOP_SCHEME, None),
        d("partial", _PARTIAL_SCHEME, _partial),
        d("parallel", _PARALLEL_SCHEME, _parallel),
        d("switch", _SWITCH_SCHEME, _switch),
        d("push", _poly((("t", 0),), (),
                        Row.closed({"vec": VecType(_A), "item": _A}),
                        Row.closed({"vec": VecType(_A)})), _push),
        d("pop", _poly((("t", 0),), (),
                       Row.closed({"vec": VecType(_A)}),
                       Row.closed({"vec": VecType(_A), "item": _A})), _pop),
        d("make_pair", _poly((("t", 0), ("t", 1)), (),
                             Row.closed({"first": _A, "second": _B}),
                             Row.closed({"pair": PairType(_A, _B)})), _make_pair),
        d("unpack_pair", _poly((("t", 0), ("t", 1)), (),
                               Row.closed({"pair": PairType(_A, _B)}),
                               Row.closed({"first": _A, "second": _B})), _unpack_pair),
        d("make_struct", _MAKE_STRUCT_SCHEME, _make_struct),
        d("unpack_struct", _UNPACK_STRUCT_SCHEME, _unpack_struct),
        d("insert_map", _poly((("t", 0), ("t", 1)), (),
                              Row.closed({"map": MapType(_A, _B), "key": _A, "value": _B}),
                              Row.closed({"map": MapType(_A, _B)})), _insert_map),
        d("remove_map", _poly((("t", 0), ("t", 1)), (),
                              Row.closed({"map": MapType(_A, _B), "key": _A}),
                              Row.closed({"map": MapType(_A, _B), "value": _B})), _remove_map),
        d("fadd", _FF_FF, _fadd),
        d("fsub", _FF_FF, _fsub),
        d("fmul", _FF_FF, _fmul),
        d("fdiv", _FF_FF, _fdiv),
        d("fpow", _FF_FF, _fpow),
        d("fneg", _mono({"value": FLOAT}, {"value": FLOAT}), _fneg),
        d("flt", _FF_FB, _flt),
        d("fgt", _FF_FB, _fgt),
        d("feq_approx", _mono({"a": FLOAT, "b": FLOAT, "eps": FLOAT}, {"value": BOOL}),
          _feq_approx),
        d("iadd", _II_II, _iadd),
        d("isub", _II_II, _isub),
        d("imul", _II_II, _imul),
        d("idiv_checked", _II_II, _idiv_checked),
        d("ilt", _II_IB, _ilt),
        d("int_to_float", _mono({"value": INT}, {"value": FLOAT}), _int_to_float),
        d("and_", _BB_B, _and),
        d("or_", _BB_B, _or),
        d("not_", _mono({"value": BOOL}, {"value": BOOL}), _not),
        d("copy", _poly((("t", 0),), (),
                        Row.closed({"value": _A}),
                        Row.closed({"value_0": _A, "value_1": _A})), _copy),
        d("discard", _poly((("t", 0),), (), Row.closed({"value": _A}), Row.closed({})),
          _discard),
        d("id", _poly((("t", 0),), (), Row.closed({"value": _A}), Row.closed({"value": _A})),
          _id),
    ]


def builtin_index() -> SignatureIndex:
    return index_of(_decls())


BUILTINS = builtin_index()
