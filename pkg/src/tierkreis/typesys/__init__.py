"""Static types for graphs: row-polymorphic syntax, unification, inference,
and runtime value/type conformance checks."""

from .exprs import (BOOL, FLOAT, INT, STR, BoolType, FloatType, GraphType,
                    IntType, MapType, PairType, Row, StrType, StructType,
                    TypeExpr, TypeScheme, VariantType, VarType, VecType,
                    free_vars, render_row, render_type, renumber_vars)
from .subst import Substitution, UnifyFailure, VarSupply, unify, unify_rows
from .infer import (InferenceResult, Lacks, Loc, Partition, TypeCheckFailure,
                    TypeViolation, generalize, infer_graph, infer_value_type,
                    instantiate)
from .check import check_value

__all__ = [
    "BOOL", "FLOAT", "INT", "STR", "BoolType", "FloatType", "GraphType",
    "IntType", "MapType", "PairType", "Row", "StrType", "StructType",
    "TypeExpr", "TypeScheme", "VariantType", "VarType", "VecType",
    "free_vars", "render_row", "render_type", "renumber_vars",
    "Substitution", "UnifyFailure", "VarSupply", "unify", "unify_rows",
    "InferenceResult", "Lacks", "Loc", "Partition", "TypeCheckFailure",
    "TypeViolation", "generalize", "infer_graph", "infer_value_type",
    "instantiate", "check_value",
]
