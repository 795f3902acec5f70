"""Runtime values: the ten value kinds that flow along graph edges.

Values are immutable after construction and hashable wherever the wire
format allows them as map keys (bools, ints, strings, and pairs/vectors/
variants built from those). Floats compare by bit pattern so that
``NaN == NaN`` and ``0.0 != -0.0``: canonical serialization must be a true
round-trip and checkpoint hashes must be stable.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Mapping, Union

if TYPE_CHECKING:
    from .graph import Graph


class ValueError_(ValueError):
    """Raised when a value violates a construction invariant."""


@dataclass(frozen=True)
class BoolValue:
    value: bool

    def __post_init__(self) -> None:
        if not isinstance(self.value, bool):
            raise ValueError_(f"BoolValue needs a bool, got {type(self.value).__name__}")


@dataclass(frozen=True)
class IntValue:
    """64-bit signed integer. Arithmetic builtins wrap on overflow."""

    value: int

    def __post_init__(self) -> None:
        if isinstance(self.value, bool) or not isinstance(self.value, int):
            raise ValueError_(f"IntValue needs an int, got {type(self.value).__name__}")
        if not (-(1 << 63) <= self.value < (1 << 63)):
            raise ValueError_(f"IntValue out of 64-bit signed range: {self.value}")


@dataclass(frozen=True, eq=False)
class FloatValue:
    value: float

    def __post_init__(self) -> None:
        if isinstance(self.value, bool) or not isinstance(self.value, (int, float)):
            raise ValueError_(f"FloatValue needs a float, got {type(self.value).__name__}")
        if isinstance(self.value, int):
            object.__setattr__(self, "value", float(self.value))

    def _bits(self) -> bytes:
        return struct.pack("<d", self.value)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FloatValue):
            return NotImplemented
        return self._bits() == other._bits()

    def __hash__(self) -> int:
        return hash(self._bits())


@dataclass(frozen=True)
class StrValue:
    value: str

    def __post_init__(self) -> None:
        if not isinstance(self.value, str):
            raise ValueError_(f"StrValue needs a str, got {type(self.value).__name__}")


@dataclass(frozen=True)
class PairValue:
    first: Value
    second: Value


@dataclass(frozen=True)
class VecValue:
    items: tuple[Value, ...]

    def __init__(self, items: Iterable[Value] = ()) -> None:
        object.__setattr__(self, "items", tuple(items))


@dataclass(frozen=True)
class MapValue:
    """Association from hashable-kind keys to values.

    Entries are stored sorted by a structural key order, making equality
    and serialization order-insensitive and canonical.
    """

    entries: tuple[tuple[Value, Value], ...]

    def __init__(self, entries: Iterable[tuple[Value, Value]] = ()) -> None:
        pairs = list(entries)
        for k, _ in pairs:
            if not is_hashable_value(k):
                raise ValueError_(f"map key kind not hashable: {kind_name(k)}")
        pairs.sort(key=lambda kv: value_sort_key(kv[0]))
        seen = set()
        for k, _ in pairs:
            if k in seen:
                raise ValueError_("duplicate map key")
            seen.add(k)
        object.__setattr__(self, "entries", tuple(pairs))

    def get(self, key: Value) -> Value | None:
        for k, v in self.entries:
            if k == key:
                return v
        return None


@dataclass(frozen=True)
class StructValue:
    """Named fields, stored sorted by label."""

    fields: tuple[tuple[str, Value], ...]

    def __init__(self, fields: Mapping[str, Value] | Iterable[tuple[str, Value]] = ()) -> None:
        items = list(fields.items()) if isinstance(fields, Mapping) else list(fields)
        labels = [l for l, _ in items]
        if len(set(labels)) != len(labels):
            raise ValueError_("struct field labels must be distinct")
        items.sort(key=lambda lv: lv[0])
        object.__setattr__(self, "fields", tuple(items))

    def get(self, label: str) -> Value | None:
        for l, v in self.fields:
            if l == label:
                return v
        return None


@dataclass(frozen=True)
class VariantValue:
    tag: str
    value: Value


@dataclass(frozen=True)
class GraphValue:
    graph: "Graph"


Value = Union[
    BoolValue,
    IntValue,
    FloatValue,
    StrValue,
    PairValue,
    VecValue,
    MapValue,
    StructValue,
    VariantValue,
    GraphValue,
]

_KIND_NAMES = {
    BoolValue: "bool",
    IntValue: "int",
    FloatValue: "float",
    StrValue: "str",
    PairValue: "pair",
    VecValue: "vec",
    MapValue: "map",
    StructValue: "struct",
    VariantValue: "variant",
    GraphValue: "graph",
}

_KIND_RANK = {cls: i for i, cls in enumerate(_KIND_NAMES)}


def kind_name(v: Value) -> str:
    return _KIND_NAMES[type(v)]


def is_hashable_value(v: Value) -> bool:
    """True for the kinds the wire format admits as map keys."""
    if isinstance(v, (BoolValue, IntValue, StrValue)):
        return True
    if isinstance(v, PairValue):
        return is_hashable_value(v.first) and is_hashable_value(v.second)
    if isinstance(v, VecValue):
        return all(is_hashable_value(x) for x in v.items)
    if isinstance(v, VariantValue):
        return is_hashable_value(v.value)
    return False


def value_sort_key(v: Value):
    """Total deterministic order over hashable-kind values (map key order)."""
    rank = _KIND_RANK[type(v)]
    if isinstance(v, BoolValue):
        return (rank, v.value)
    if isinstance(v, IntValue):
        return (rank, v.value)
    if isinstance(v, StrValue):
        return (rank, v.value)
    if isinstance(v, PairValue):
        return (rank, value_sort_key(v.first), value_sort_key(v.second))
    if isinstance(v, VecValue):
        return (rank, tuple(value_sort_key(x) for x in v.items))
    if isinstance(v, VariantValue):
        return (rank, v.tag, value_sort_key(v.value))
    raise ValueError_(f"no sort order for value kind {kind_name(v)}")


def value_of(obj) -> Value:
    """Lift a plain Python object into a Value.

    bool/int/float/str map to their kinds, 2-tuples to Pair, lists to Vec,
    dicts to Map (str-keyed dicts to Struct would be ambiguous, so dicts are
    always Map; use StructValue directly for structs). Existing Values pass
    through.
    """
    if isinstance(obj, (BoolValue, IntValue, FloatValue, StrValue, PairValue,
                        VecValue, MapValue, StructValue, VariantValue, GraphValue)):
        return obj
    if isinstance(obj, bool):
        return BoolValue(obj)
    if isinstance(obj, int):
        return IntValue(obj)
    if isinstance(obj, float):
        return FloatValue(obj)
    if isinstance(obj, str):
        return StrValue(obj)
    if isinstance(obj, tuple) and len(obj) == 2:
        return PairValue(value_of(obj[0]), value_of(obj[1]))
    if isinstance(obj, list):
        return VecValue(value_of(x) for x in obj)
    if isinstance(obj, dict):
        return MapValue((value_of(k), value_of(v)) for k, v in obj.items())
    raise ValueError_(f"cannot lift {type(obj).__name__} into a Value")


def to_python(v: Value):
    """Best-effort inverse of value_of, for display and tests."""
    if isinstance(v, (BoolValue, IntValue, FloatValue, StrValue)):
        return v.value
    if isinstance(v, PairValue):
        return (to_python(v.first), to_python(v.second))
    if isinstance(v, VecValue):
        return [to_python(x) for x in v.items]
    if isinstance(v, MapValue):
        return {to_python(k): to_python(val) for k, val in v.entries}
    if isinstance(v, StructValue):
        return {l: to_python(val) for l, val in v.fields}
    if isinstance(v, VariantValue):
        return (v.tag, to_python(v.value))
    return v
