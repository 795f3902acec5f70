"""Derive wire type schemes from Python annotations.

bool/int/float/str map to the scalar kinds, 2-tuples to pairs, sequences to
vectors, mappings to maps, dataclasses to structs, unions of dataclasses to
variants tagged by class name, and GraphHandle parameters to polymorphic
graph types. A single return annotation becomes output port ``value``; a
dataclass return becomes one output port per field.
"""

from __future__ import annotations

import dataclasses
import inspect
import typing

from .wire import (GraphHandle, RowT, Scheme, TBool, TFloat, TGraph, TInt,
                   TMap, TPair, TStr, TStruct, TVariant, TVec, Type)


class SchemaError(TypeError):
    pass


class _VarAlloc:
    def __init__(self):
        self.next = 0
        self.rows: list[int] = []

    def fresh_row(self) -> int:
        rid = self.next
        self.next += 1
        self.rows.append(rid)
        return rid


def _annotation_to_type(ann, alloc: _VarAlloc, where: str) -> Type:
    if ann is inspect.Parameter.empty or ann is None:
        raise SchemaError(f"{where}: missing type annotation")
    if ann is bool:
        return TBool()
    if ann is int:
        return TInt()
    if ann is float:
        return TFloat()
    if ann is str:
        return TStr()
    if ann is GraphHandle:
        return TGraph(RowT((), alloc.fresh_row()), RowT((), alloc.fresh_row()))
    origin = typing.get_origin(ann)
    args = typing.get_args(ann)
    if origin in (list, typing.Sequence) or (origin is None and ann is list):
        if not args:
            raise SchemaError(f"{where}: bare list needs an element type")
        return TVec(_annotation_to_type(args[0], alloc, where))
    if origin in (dict, typing.Mapping):
        if len(args) != 2:
            raise SchemaError(f"{where}: dict needs key and value types")
        return TMap(_annotation_to_type(args[0], alloc, where),
                    _annotation_to_type(args[1], alloc, where))
    if origin is tuple:
        if len(args) != 2:
            raise SchemaError(f"{where}: only 2-tuples map to pairs")
        return TPair(_annotation_to_type(args[0], alloc, where),
                     _annotation_to_type(args[1], alloc, where))
    if origin is typing.Union:
        members = [a for a in args if a is not type(None)]
        if not all(dataclasses.is_dataclass(m) for m in members):
            raise SchemaError(f"{where}: unions must be over dataclasses")
        row = {m.__name__: _dataclass_type(m, alloc, where) for m in members}
        return TVariant(RowT.of(row))
    if dataclasses.is_dataclass(ann):
        return _dataclass_type(ann, alloc, where)
    raise SchemaError(f"{where}: unsupported annotation {ann!r}")


def _dataclass_type(cls, alloc: _VarAlloc, where: str) -> TStruct:
    hints = typing.get_type_hints(cls)
    row = {f.name: _annotation_to_type(hints[f.name], alloc, f"{where}.{f.name}")
           for f in dataclasses.fields(cls)}
    return TStruct(RowT.of(row))


def derive_scheme(fn) -> Scheme:
    """Scheme of an annotated callable; rejects unannotated signatures."""
    sig = inspect.signature(fn)
    hints = typing.get_type_hints(fn)
    alloc = _VarAlloc()
    inputs: dict[str, Type] = {}
    for name, param in sig.parameters.items():
        if param.kind in (param.VAR_POSITIONAL, param.VAR_KEYWORD):
            raise SchemaError(f"{fn.__name__}: *args/**kwargs not supported")
        inputs[name] = _annotation_to_type(hints.get(name, param.annotation),
                                           alloc, f"{fn.__name__}({name})")
    ret = hints.get("return", sig.return_annotation)
    if ret is inspect.Signature.empty or ret is None:
        raise SchemaError(f"{fn.__name__}: missing return annotation")
    if dataclasses.is_dataclass(ret):
        # multi-output: the record's fields name the ports
        ret_hints = typing.get_type_hints(ret)
        outputs = {f.name: _annotation_to_type(ret_hints[f.name], alloc,
                                               f"{fn.__name__}->{f.name}")
                   for f in dataclasses.fields(ret)}
    else:
        outputs = {"value": _annotation_to_type(ret, alloc, f"{fn.__name__}->return")}
    forall = tuple(("r", rid) for rid in alloc.rows)
    return Scheme(forall, (), RowT.of(inputs), RowT.of(outputs))


def output_is_record(fn) -> bool:
    ret = typing.get_type_hints(fn).get("return")
    return dataclasses.is_dataclass(ret)
