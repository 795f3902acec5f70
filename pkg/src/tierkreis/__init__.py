"""Typed higher-order dataflow graphs with a distributed runtime."""

from .builder import GraphBuilder, NodeRef, OutPort
from .builtins import BUILTINS, builtin_index
from .graph import (BoxNode, ConstNode, Edge, FunctionNode, Graph, InputNode,
                    InvalidGraph, MatchNode, Node, OutputNode, StructuralError,
                    TagNode, graph_signature, insert_copies, topological_sort,
                    validate_graph)
from .serialize import (DecodeError, deserialize_graph, deserialize_value,
                        serialize_graph, serialize_value)
from .values import (BoolValue, FloatValue, GraphValue, IntValue, MapValue,
                     PairValue, StrValue, StructValue, Value, VariantValue,
                     VecValue, value_of)

__all__ = [
    "GraphBuilder", "NodeRef", "OutPort",
    "BUILTINS", "builtin_index",
    "BoxNode", "ConstNode", "Edge", "FunctionNode", "Graph", "InputNode",
    "InvalidGraph", "MatchNode", "Node", "OutputNode", "StructuralError",
    "TagNode", "graph_signature", "insert_copies", "topological_sort",
    "validate_graph",
    "DecodeError", "deserialize_graph", "deserialize_value",
    "serialize_graph", "serialize_value",
    "BoolValue", "FloatValue", "GraphValue", "IntValue", "MapValue",
    "PairValue", "StrValue", "StructValue", "Value", "VariantValue",
    "VecValue", "value_of",
]

__version__ = "0.1.0"
