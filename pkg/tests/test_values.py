import math

import pytest

from tierkreis.values import (BoolValue, FloatValue, IntValue, MapValue,
                              PairValue, StrValue, StructValue, ValueError_,
                              VariantValue, VecValue, is_hashable_value,
                              to_python, value_of)


def test_value_of_round_trips_basic_python():
    assert value_of(True) == BoolValue(True)
    assert value_of(3) == IntValue(3)
    assert value_of(0.5) == FloatValue(0.5)
    assert value_of("hi") == StrValue("hi")
    assert value_of([1, 2]) == VecValue((IntValue(1), IntValue(2)))
    assert value_of((1, "a")) == PairValue(IntValue(1), StrValue("a"))
    assert to_python(value_of({1: "a"})) == {1: "a"}


def test_bool_is_not_int():
    assert value_of(True) != IntValue(1)
    assert IntValue(1) != FloatValue(1.0)


def test_int_is_64_bit():
    IntValue(2**63 - 1)
    IntValue(-(2**63))
    with pytest.raises(ValueError_):
        IntValue(2**63)


def test_float_bitwise_equality():
    assert FloatValue(math.nan) == FloatValue(math.nan)
    assert FloatValue(0.0) != FloatValue(-0.0)
    assert FloatValue(1.5) == FloatValue(1.5)


def test_map_keys_must_be_hashable_kinds():
    MapValue([(IntValue(1), StrValue("a"))])
    MapValue([(PairValue(IntValue(1), StrValue("x")), IntValue(0))])
    with pytest.raises(ValueError_):
        MapValue([(FloatValue(1.0), IntValue(0))])
    with pytest.raises(ValueError_):
        MapValue([(MapValue(), IntValue(0))])


def test_map_duplicate_keys_rejected():
    with pytest.raises(ValueError_):
        MapValue([(IntValue(1), StrValue("a")), (IntValue(1), StrValue("b"))])


def test_map_equality_is_order_insensitive():
    a = MapValue([(IntValue(1), StrValue("a")), (IntValue(2), StrValue("b"))])
    b = MapValue([(IntValue(2), StrValue("b")), (IntValue(1), StrValue("a"))])
    assert a == b


def test_struct_labels_distinct_and_sorted():
    s = StructValue({"b": IntValue(1), "a": IntValue(2)})
    assert [l for l, _ in s.fields] == ["a", "b"]
    with pytest.raises(ValueError_):
        StructValue([("x", IntValue(1)), ("x", IntValue(2))])


def test_hashable_value_kinds():
    assert is_hashable_value(value_of([1, 2]))
    assert is_hashable_value(VariantValue("t", IntValue(1)))
    assert not is_hashable_value(FloatValue(1.0))
    assert not is_hashable_value(value_of([1.0]))
    assert not is_hashable_value(StructValue({"a": IntValue(1)}))
