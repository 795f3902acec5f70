"""Runtime conformance of values against (partially) resolved types.

Free type variables mean "no constraint here" and are skipped, so a check
against a polymorphic annotation only verifies the ground fragment. Graph
values are checked by unifying their inferred signature with the expected
graph type, which needs a signature index for the functions they mention.
"""

from __future__ import annotations

from typing import Optional

from ..values import (BoolValue, FloatValue, GraphValue, IntValue, MapValue,
                      PairValue, StrValue, StructValue, Value, VariantValue,
                      VecValue, kind_name)
from .exprs import (BoolType, FloatType, GraphType, IntType, MapType,
                    PairType, Row, StrType, StructType, TypeExpr, VariantType,
                    VarType, VecType, render_type)
from .infer import Loc, SignatureLike, TypeViolation, infer_graph, instantiate
from .subst import Substitution, UnifyFailure, VarSupply, unify


def check_value(v: Value, t: TypeExpr, sigs: Optional[SignatureLike] = None,
                path: str = "") -> Optional[TypeViolation]:
    """None if ``v`` conforms to ``t``; otherwise a Mismatch locating the
    offending position by path into the value."""

    def mismatch(sub_path: str, expected: TypeExpr, actual: Value,
                 message: str = "") -> TypeViolation:
        return TypeViolation("Mismatch", Loc(value_path=sub_path or "/"),
                             expected=render_type(expected), actual=kind_name(actual),
                             message=message)

    if isinstance(t, VarType):
        return None
    if isinstance(t, BoolType):
        return None if isinstance(v, BoolValue) else mismatch(path, t, v)
    if isinstance(t, IntType):
        return None if isinstance(v, IntValue) else mismatch(path, t, v)
    if isinstance(t, FloatType):
        return None if isinstance(v, FloatValue) else mismatch(path, t, v)
    if isinstance(t, StrType):
        return None if isinstance(v, StrValue) else mismatch(path, t, v)
    if isinstance(t, PairType):
        if not isinstance(v, PairValue):
            return mismatch(path, t, v)
        return (check_value(v.first, t.first, sigs, path + "/first")
                or check_value(v.second, t.second, sigs, path + "/second"))
    if isinstance(t, VecType):
        if not isinstance(v, VecValue):
            return mismatch(path, t, v)
        for i, item in enumerate(v.items):
            bad = check_value(item, t.item, sigs, f"{path}/{i}")
            if bad:
                return bad
        return None
    if isinstance(t, MapType):
        if not isinstance(v, MapValue):
            return mismatch(path, t, v)
        for i, (k, val) in enumerate(v.entries):
            bad = (check_value(k, t.key, sigs, f"{path}/key{i}")
                   or check_value(val, t.value, sigs, f"{path}/val{i}"))
            if bad:
                return bad
        return None
    if isinstance(t, StructType):
        if not isinstance(v, StructValue):
            return mismatch(path, t, v)
        have = {l for l, _ in v.fields}
        want = set(t.row.labels())
        if t.row.is_closed():
            if have != want:
                return mismatch(path, t, v,
                                f"struct fields {sorted(have)} != row labels {sorted(want)}")
        elif not want <= have:
            missing = sorted(want - have)[0]
            return mismatch(path, t, v, f"struct missing field {missing!r}")
        row = t.row.to_dict()
        for label, val in v.fields:
            if label in row:
                bad = check_value(val, row[label], sigs, f"{path}/{label}")
                if bad:
                    return bad
        return None
    if isinstance(t, VariantType):
        if not isinstance(v, VariantValue):
            return mismatch(path, t, v)
        row = t.row.to_dict()
        if v.tag in row:
            return check_value(v.value, row[v.tag], sigs, f"{path}/{v.tag}")
        if t.row.is_closed():
            return mismatch(path, t, v, f"tag {v.tag!r} not among {t.row.labels()}")
        return None  # open row: tag may live in the unconstrained tail
    if isinstance(t, GraphType):
        if not isinstance(v, GraphValue):
            return mismatch(path, t, v)
        if sigs is None:
            return None
        result = _inference_of(v.graph, sigs)
        if not result.ok:
            return TypeViolation("Mismatch", Loc(value_path=path or "/"),
                                 expected=render_type(t), actual="graph",
                                 message="graph value does not type-check: "
                                         + "; ".join(str(e) for e in result.errors[:3]))
        supply = VarSupply(_max_var(t) + 1)
        sub = Substitution()
        inst = instantiate(result.scheme, supply)
        for l in inst.lacks:
            sub.lacks_of(l.row).add(l.label)
        try:
            unify(GraphType(inst.inputs, inst.outputs), t, sub, supply)
        except UnifyFailure as f:
            return TypeViolation("Mismatch", Loc(value_path=path or "/"),
                                 expected=render_type(t),
                                 actual=render_type(GraphType(inst.inputs, inst.outputs)),
                                 message=f.message)
        return None
    raise TypeError(f"not a type expression: {t!r}")


def _max_var(t: TypeExpr) -> int:
    from .exprs import free_vars

    return max((vid for _, vid in free_vars(t)), default=-1)


_infer_memo: dict = {}


def _inference_of(g, sigs):
    """Graph-value conformance is checked on every edge a thunk crosses, so
    the (immutable) inference result is memoized per graph and index."""
    key = (id(sigs), g)
    hit = _infer_memo.get(key)
    if hit is not None:
        return hit
    result = infer_graph(g, sigs)
    if len(_infer_memo) > 2048:
        _infer_memo.clear()
    _infer_memo[key] = result
    return result
