"""Disjoint-union (partition) constraint solving."""

import pytest

from tierkreis.typesys.exprs import FLOAT, INT, STR, Row, VarType, VecType
from tierkreis.typesys.infer import Loc, Partition, solve_partition
from tierkreis.typesys.subst import Substitution, UnifyFailure, VarSupply


def env():
    return Substitution(), VarSupply(100)


def test_difference_when_whole_and_a_known():
    # a=(x: Int), b=R, whole=(x: Int, y: Str)  =>  R -> (y: Str)
    sub, supply = env()
    p = Partition(Row.closed({"x": INT}), Row.var(0),
                  Row.closed({"x": INT, "y": STR}), Loc())
    assert solve_partition(p, sub, supply) is True
    assert sub.apply(Row.var(0)) == Row.closed({"y": STR})


def test_difference_unifies_shared_label_types():
    sub, supply = env()
    p = Partition(Row.closed({"x": VarType(5)}), Row.var(0),
                  Row.closed({"x": INT, "y": STR}), Loc())
    assert solve_partition(p, sub, supply)
    assert sub.apply(VarType(5)) == INT


def test_union_when_parts_known():
    sub, supply = env()
    p = Partition(Row.closed({"x": INT}), Row.closed({"y": STR}), Row.var(0), Loc())
    assert solve_partition(p, sub, supply)
    assert sub.apply(Row.var(0)) == Row.closed({"x": INT, "y": STR})


def test_overlap_is_duplicate_label():
    sub, supply = env()
    p = Partition(Row.closed({"x": INT}), Row.closed({"x": FLOAT}), Row.var(0), Loc())
    with pytest.raises(UnifyFailure) as e:
        solve_partition(p, sub, supply)
    assert e.value.kind == "DuplicateLabel"


def test_part_escaping_whole_is_missing_label():
    sub, supply = env()
    p = Partition(Row.closed({"z": INT}), Row.var(0), Row.closed({"x": INT}), Loc())
    with pytest.raises(UnifyFailure) as e:
        solve_partition(p, sub, supply)
    assert e.value.kind == "MissingLabel"


def test_defers_when_underdetermined():
    sub, supply = env()
    p = Partition(Row.open({"x": INT}, 1), Row.var(2), Row.var(3), Loc())
    assert solve_partition(p, sub, supply) is False  # defer


def test_symmetric_difference_for_known_b():
    sub, supply = env()
    p = Partition(Row.var(0), Row.closed({"y": STR}),
                  Row.closed({"x": INT, "y": STR}), Loc())
    assert solve_partition(p, sub, supply)
    assert sub.apply(Row.var(0)) == Row.closed({"x": INT})


def test_eval_style_partition_empty_remainder():
    # splitting (value: Vec(Float)) by itself leaves the empty row
    sub, supply = env()
    vecf = Row.closed({"value": VecType(FLOAT)})
    p = Partition(vecf, Row.var(0), vecf, Loc())
    assert solve_partition(p, sub, supply)
    assert sub.apply(Row.var(0)) == Row.closed({})
