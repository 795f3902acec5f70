import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tierkreis import examples
from tierkreis.serialize import (DecodeError, deserialize_graph,
                                 deserialize_value, serialize_graph,
                                 serialize_value)
from tierkreis.values import (BoolValue, FloatValue, GraphValue, IntValue,
                              MapValue, PairValue, StrValue, StructValue,
                              VariantValue, VecValue)

# -- strategies ---------------------------------------------------------------

scalars = st.one_of(
    st.booleans().map(BoolValue),
    st.integers(min_value=-(2**63), max_value=2**63 - 1).map(IntValue),
    st.floats(allow_nan=True, allow_infinity=True).map(FloatValue),
    st.text(max_size=20).map(StrValue),
)

hashable_values = st.recursive(
    st.one_of(
        st.booleans().map(BoolValue),
        st.integers(min_value=-(2**63), max_value=2**63 - 1).map(IntValue),
        st.text(max_size=8).map(StrValue),
    ),
    lambda inner: st.one_of(
        st.tuples(inner, inner).map(lambda p: PairValue(*p)),
        st.lists(inner, max_size=3).map(VecValue),
        st.tuples(st.text(max_size=5), inner).map(lambda t: VariantValue(t[0] or "t", t[1])),
    ),
    max_leaves=6,
)

values = st.recursive(
    scalars,
    lambda inner: st.one_of(
        st.tuples(inner, inner).map(lambda p: PairValue(*p)),
        st.lists(inner, max_size=4).map(VecValue),
        st.dictionaries(st.text(max_size=6), inner, max_size=4).map(StructValue),
        st.tuples(st.text(min_size=1, max_size=6), inner).map(lambda t: VariantValue(*t)),
        st.lists(st.tuples(hashable_values, inner), max_size=3, unique_by=lambda kv: kv[0])
        .map(MapValue),
    ),
    max_leaves=12,
)


@given(values)
@settings(max_examples=300, deadline=None)
def test_value_round_trip_and_canonical(v):
    data = serialize_value(v)
    back = deserialize_value(data)
    assert back == v
    assert serialize_value(back) == data


def test_float_special_literals():
    for f, lit in ((math.nan, b'"NaN"'), (math.inf, b'"Infinity"'), (-math.inf, b'"-Infinity"')):
        data = serialize_value(FloatValue(f))
        assert data == b'{"float":' + lit + b"}"
        assert deserialize_value(data) == FloatValue(f)


def test_variant_wire_shape_matches_schema():
    v = VariantValue("break", IntValue(3))
    assert serialize_value(v) == b'{"variant":{"tag":"break","value":{"int":3}}}'
    assert deserialize_value(serialize_value(v)) == v


def test_vec_float_round_trip():
    v = VecValue((FloatValue(0.2), FloatValue(0.2)))
    assert deserialize_value(serialize_value(v)) == v
    assert serialize_value(v) == b'{"vec":[{"float":0.2},{"float":0.2}]}'


def test_map_round_trip():
    v = MapValue([(IntValue(1), StrValue("a"))])
    assert deserialize_value(serialize_value(v)) == v


def test_map_decode_is_canonical_regardless_of_order():
    shuffled = b'{"map":[[{"int":2},{"str":"b"}],[{"int":1},{"str":"a"}]]}'
    v = deserialize_value(shuffled)
    assert serialize_value(v) == b'{"map":[[{"int":1},{"str":"a"}],[{"int":2},{"str":"b"}]]}'


def test_decode_error_paths():
    with pytest.raises(DecodeError) as e:
        deserialize_value(b'{"vec":[{"int":1},{"bogus":2}]}')
    assert e.value.path == "/vec/1"
    with pytest.raises(DecodeError) as e:
        deserialize_value(b'{"int":"nope"}')
    assert e.value.path == "/int"
    with pytest.raises(DecodeError) as e:
        deserialize_graph(b'{"nodes": "oops"}')
    assert e.value.path == "/nodes"
    with pytest.raises(DecodeError):
        deserialize_value(b"not json")


def test_graph_round_trip_fig1a(fig1a):
    data = serialize_graph(fig1a)
    back = deserialize_graph(data)
    assert back == fig1a
    assert serialize_graph(back) == data


def test_graph_round_trip_full_corpus():
    for name, (g, _) in examples.corpus().items():
        data = serialize_graph(g)
        assert deserialize_graph(data) == g, name
        assert serialize_graph(deserialize_graph(data)) == data, name


def test_graph_value_embeds_graph(fig1a):
    v = GraphValue(fig1a)
    assert deserialize_value(serialize_value(v)) == v


def test_passthrough_round_trip():
    g = examples.passthrough()
    assert deserialize_graph(serialize_graph(g)) == g


def test_annotated_graph_round_trip(fig1a, builtins):
    from tierkreis.typesys import infer_graph

    annotated = infer_graph(fig1a, builtins).graph
    assert deserialize_graph(serialize_graph(annotated)) == annotated
