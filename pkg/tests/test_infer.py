import pytest

from tierkreis import examples
from tierkreis.builder import GraphBuilder
from tierkreis.graph import InvalidGraph
from tierkreis.typesys import (TypeCheckFailure, check_value, generalize,
                               infer_graph, infer_value_type, instantiate)
from tierkreis.typesys.exprs import (BOOL, FLOAT, INT, STR, GraphType,
                                     PairType, Row, SchemePartition,
                                     StructType, VariantType, VarType,
                                     VecType, free_vars, render_type)
from tierkreis.typesys.infer import Loc, Partition
from tierkreis.typesys.subst import Substitution, VarSupply
from tierkreis.values import (FloatValue, GraphValue, IntValue, StrValue,
                              StructValue, VariantValue, value_of)


def test_fig1a_all_edges_float(fig1a, builtins):
    result = infer_graph(fig1a, builtins)
    assert result.ok
    assert len(result.graph.edges) == 5
    assert all(e.ty == FLOAT for e in result.graph.edges)


def test_fig1b_polymorphic_over_one_variable(fig1b, builtins):
    result = infer_graph(fig1b, builtins)
    assert result.ok
    scheme = result.scheme
    assert scheme.quantified == (("t", 0),)
    # the variable sits at the thunk's output and the pair's second slot
    run_ty = scheme.inputs.to_dict()["run"]
    assert run_ty == GraphType(Row.closed({"value": VecType(FLOAT)}),
                               Row.closed({"value": VarType(0)}))
    out_ty = scheme.outputs.to_dict()["value"]
    assert out_ty == VecType(PairType(VecType(FLOAT), VarType(0)))


def test_fig1b_grounds_when_thunk_supplied(builtins):
    b = GraphBuilder()
    box = b.box(examples.initial_graph(),
                run=b.const(GraphValue(examples.zexp_to_parity())))
    b.output(value=box["value"])
    # zexp takes port x, not value: that must be a located failure
    result = infer_graph(b.build(), builtins)
    assert not result.ok

    runner = GraphBuilder("runner")
    inner = runner.fn("builtin/fdiv", a=runner.input("value"), b=runner.const(2.0))
    runner.output(value=inner["value"])
    # runner wants a Float input but initial supplies Vec(Float): also caught
    result = infer_graph(_apply_initial(runner.build()), builtins)
    assert not result.ok
    assert any(v.kind == "Mismatch" for v in result.errors)


def _apply_initial(runner_graph):
    b = GraphBuilder()
    box = b.box(examples.initial_graph(), run=b.const(GraphValue(runner_graph)))
    b.output(value=box["value"])
    return b.build()


def test_fig1b_grounded_by_vec_runner(builtins):
    runner = GraphBuilder("runner")
    popped = runner.fn("builtin/pop", vec=runner.input("value"))
    runner.fn("builtin/discard", value=popped["vec"])
    runner.output(value=popped["item"])
    result = infer_graph(_apply_initial(runner.build()), builtins)
    assert result.ok
    assert result.outputs.to_dict()["value"] == VecType(PairType(VecType(FLOAT), FLOAT))


def test_mismatch_located_at_edge(builtins):
    b = GraphBuilder()
    fsub = b.fn("builtin/fsub", a=b.const("one"), b=b.input("x"))
    fdiv = b.fn("builtin/fdiv", a=fsub["value"], b=b.const(2.0))
    b.output(parity=fdiv["value"])
    result = infer_graph(b.build(), builtins)
    assert not result.ok
    [err] = [v for v in result.errors if v.kind == "Mismatch"]
    assert err.loc.edge is not None  # the const -> fsub.a edge
    assert err.expected == "Float"
    assert err.actual == "Str"


def test_unknown_function_reported(builtins):
    b = GraphBuilder()
    n = b.fn("nope/f", value=b.const(1))
    b.output(v=n["value"])
    result = infer_graph(b.build(), builtins)
    assert not result.ok
    assert any(v.kind == "UnknownFunction" and "nope/f" in v.message
               for v in result.errors)


def test_independent_errors_all_collected(builtins):
    b = GraphBuilder()
    bad1 = b.fn("builtin/fneg", value=b.const(1))      # Int into Float
    bad2 = b.fn("builtin/not_", value=b.const("s"))    # Str into Bool
    b.output(a=bad1["value"], b=bad2["value"])
    result = infer_graph(b.build(), builtins)
    assert not result.ok
    assert len(result.errors) >= 2


def test_instantiate_eval_twice_is_fresh(builtins):
    scheme = builtins.lookup_scheme("builtin/eval")
    supply = VarSupply(0)
    a = instantiate(scheme, supply)
    b = instantiate(scheme, supply)
    vars_a = {v for _, v in free_vars(a.inputs)} | {v for _, v in free_vars(a.outputs)}
    vars_b = {v for _, v in free_vars(b.inputs)} | {v for _, v in free_vars(b.outputs)}
    assert vars_a and vars_b and not (vars_a & vars_b)


def test_instantiate_fsub_is_ground(builtins):
    inst = instantiate(builtins.lookup_scheme("builtin/fsub"), VarSupply(0))
    assert inst.inputs == Row.closed({"a": FLOAT, "b": FLOAT})
    assert inst.outputs == Row.closed({"value": FLOAT})
    assert not inst.partitions and not inst.lacks


def test_instantiate_partial_has_partition(builtins):
    inst = instantiate(builtins.lookup_scheme("builtin/partial"), VarSupply(0))
    assert len(inst.partitions) == 1
    assert len(inst.lacks) == 1
    row_vars = {v for _, v in free_vars(inst.inputs)} | {v for _, v in free_vars(inst.outputs)}
    assert len(row_vars) == 4  # I, I1, I2, O all fresh


def test_tag_node_infers_open_variant(builtins):
    b = GraphBuilder()
    t = b.tag("break", b.const(3))
    b.output(v=t["value"])
    result = infer_graph(b.build(), builtins)
    assert result.ok
    ty = result.outputs.to_dict()["v"]
    assert isinstance(ty, VariantType)
    assert ty.row.to_dict()["break"] == INT
    assert not ty.row.is_closed()


def test_match_node_typing(builtins):
    handler = GraphBuilder("double")
    m = handler.fn("builtin/fmul", a=handler.input("value"), b=handler.const(2.0))
    handler.output(value=m["value"])
    other = GraphBuilder("neg")
    n = other.fn("builtin/fneg", value=other.input("value"))
    other.output(value=n["value"])

    b = GraphBuilder()
    mt = b.match(b.input("variant"),
                 dbl=b.const(GraphValue(handler.build())),
                 neg=b.const(GraphValue(other.build())))
    ev = b.fn("builtin/eval", thunk=mt["thunk"])
    b.output(v=ev["value"])
    result = infer_graph(b.build(), builtins)
    assert result.ok
    vty = result.inputs.to_dict()["variant"]
    assert isinstance(vty, VariantType)
    assert vty.row.is_closed()
    assert vty.row.to_dict() == {"dbl": FLOAT, "neg": FLOAT}


def test_loop_body_type_checked(builtins):
    g = examples.counting_loop(5)
    result = infer_graph(g, builtins)
    assert result.ok
    assert result.outputs.to_dict()["n"] == INT


def test_eval_with_missing_thunk_input_is_type_error(builtins):
    b = GraphBuilder()
    ev = b.fn("builtin/eval", thunk=b.const(GraphValue(examples.zexp_to_parity())))
    b.output(p=ev["parity"])
    result = infer_graph(b.build(), builtins)  # no x supplied
    assert not result.ok
    assert any(v.kind == "MissingLabel" for v in result.errors)


def test_reinference_is_fixed_point(builtins, mocks):
    for name, (g, _) in examples.corpus().items():
        result = infer_graph(g, mocks)
        assert result.ok, (name, result.errors)
        again = infer_graph(result.graph, mocks)
        assert again.ok, name
        assert again.graph == result.graph, name


def test_map_key_hashability_enforced(builtins):
    b = GraphBuilder()
    ins = b.fn("builtin/insert_map", map=b.const({}), key=b.const(1.5),
               value=b.const("x"))
    b.output(m=ins["map"])
    result = infer_graph(b.build(), builtins)
    assert not result.ok
    assert any("hashable" in v.message for v in result.errors)


def test_partial_on_opaque_thunk_retains_partition(builtins):
    b = GraphBuilder()
    p = b.fn("builtin/partial", thunk=b.input("t"))
    b.output(value=p["value"])
    result = infer_graph(b.build(), builtins)
    assert result.ok
    parts = [c for c in result.scheme.constraints if isinstance(c, SchemePartition)]
    assert len(parts) == 1


def test_generalize_floating_partition_is_unsolved():
    sub = Substitution()
    residual = [Partition(Row.var(50), Row.var(51), Row.var(52), Loc(node=3))]
    scheme, errors = generalize(Row.closed({"x": INT}), Row.closed({}), residual, sub)
    assert [e.kind for e in errors] == ["UnsolvedPartition"]


def test_generalize_ground_graph_has_empty_quantifiers(fig1a, builtins):
    result = infer_graph(fig1a, builtins)
    assert result.scheme.quantified == ()
    assert result.scheme.constraints == ()


def test_infer_requires_valid_graph(builtins):
    from tierkreis.graph import Graph, Node, InputNode

    with pytest.raises(InvalidGraph):
        infer_graph(Graph([Node(0, InputNode())], []), builtins)


def test_box_error_carries_path(builtins):
    inner = GraphBuilder("inner")
    n = inner.fn("builtin/fneg", value=inner.const(1))  # Int into Float
    inner.output(v=n["value"])
    outer = GraphBuilder()
    box = outer.box(inner._nodes and inner.build())
    outer.output(v=box["v"])
    result = infer_graph(outer.build(), builtins)
    assert not result.ok
    assert any(v.loc.path for v in result.errors)


# -- value typing / conformance ---------------------------------------------------

def test_infer_value_types(builtins):
    assert infer_value_type(value_of(5), builtins) == INT
    assert infer_value_type(value_of([0.2, 0.2]), builtins) == VecType(FLOAT)
    t = infer_value_type(StructValue({"a": IntValue(1)}), builtins)
    assert t == StructType(Row.closed({"a": INT}))
    with pytest.raises(TypeCheckFailure):
        infer_value_type(value_of([1, "x"]), builtins)


def test_check_value_spot_cases(builtins):
    assert check_value(IntValue(5), INT) is None
    v = VariantValue("continue", IntValue(3))
    t = VariantType(Row.closed({"continue": INT, "break": STR}))
    assert check_value(v, t) is None
    bad = check_value(FloatValue(1.0), INT)
    assert bad is not None and bad.kind == "Mismatch"
    assert bad.loc.value_path == "/"


def test_check_value_variant_tag_not_in_closed_row():
    v = VariantValue("other", IntValue(3))
    t = VariantType(Row.closed({"continue": INT}))
    assert check_value(v, t) is not None


def test_check_value_struct_exact_labels():
    t = StructType(Row.closed({"a": INT, "b": STR}))
    assert check_value(StructValue({"a": IntValue(1), "b": StrValue("x")}), t) is None
    assert check_value(StructValue({"a": IntValue(1)}), t) is not None
    assert check_value(StructValue({"a": IntValue(1), "b": StrValue("x"),
                                    "c": IntValue(2)}), t) is not None


def test_check_value_skips_variables():
    assert check_value(IntValue(1), VarType(0)) is None
    assert check_value(value_of([1]), VecType(VarType(0))) is None


def test_check_value_graph_against_graph_type(fig1a, builtins):
    t = GraphType(Row.closed({"x": FLOAT}), Row.closed({"parity": FLOAT}))
    assert check_value(GraphValue(fig1a), t, builtins) is None
    bad_t = GraphType(Row.closed({"x": INT}), Row.closed({"parity": FLOAT}))
    assert check_value(GraphValue(fig1a), bad_t, builtins) is not None


def test_check_value_nested_path():
    bad = check_value(value_of([(1, "a"), (2, 3)]),
                      VecType(PairType(INT, STR)))
    assert bad is not None
    assert bad.loc.value_path == "/1/second"
