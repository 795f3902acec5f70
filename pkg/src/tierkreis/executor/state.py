"""Mutable per-run state: frames of edge-value slots.

The unique value on each edge is the entire program state; a frame is one
dynamic activation of a graph (the root, an eval/box call, or one loop
iteration). Slots move Empty -> Full -> Consumed exactly once.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional

from ..graph import Graph
from ..serialize import serialize_graph
from ..values import Value

EdgeKey = tuple[int, str, int, str]


def graph_hash(g: Graph) -> str:
    return hashlib.sha256(serialize_graph(g.strip_types())).hexdigest()


class Slot:
    __slots__ = ("state", "value")

    def __init__(self, state: str = "empty", value: Optional[Value] = None):
        self.state = state
        self.value = value

    def fill(self, value: Value) -> None:
        if self.state != "empty":
            raise AssertionError(f"slot already {self.state}; edges carry one value only")
        self.state = "full"
        self.value = value

    def consume(self) -> Value:
        if self.state != "full":
            raise AssertionError(f"consuming a {self.state} slot")
        v = self.value
        self.state = "consumed"
        self.value = None
        return v

    def peek(self) -> Value:
        if self.state != "full":
            raise AssertionError(f"reading a {self.state} slot")
        return self.value


@dataclass
class LoopState:
    iteration: int
    value: Value  # the value this iteration's body was seeded with


@dataclass
class Frame:
    """One activation of a graph. ``graph`` is the annotated form; ``parent``
    is (frame id, node id awaiting this frame's outputs)."""

    id: int
    graph: Graph
    slots: dict[EdgeKey, Slot]
    fired: set[int]
    parent: Optional[tuple[int, int]] = None
    loop: Optional[LoopState] = None

    def __post_init__(self) -> None:
        # adjacency maps: the scheduler polls readiness every round
        self.nodes_by_id = {n.id: n for n in self.graph.nodes}
        self.in_map: dict[int, list] = {n.id: [] for n in self.graph.nodes}
        self.out_map: dict[int, list] = {n.id: [] for n in self.graph.nodes}
        for e in self.graph.edges:
            self.in_map[e.dst[0]].append(e)
            self.out_map[e.src[0]].append(e)
        self.input_id = self.graph.input_node().id
        self.output_id = self.graph.output_node().id

    @staticmethod
    def fresh(frame_id: int, annotated: Graph, parent=None, loop=None) -> "Frame":
        return Frame(frame_id, annotated, {e.key(): Slot() for e in annotated.edges},
                     set(), parent, loop)

    def seed_inputs(self, values: dict[str, Value]) -> None:
        """Fill the Input node's outgoing edges and mark it fired."""
        for e in self.out_map[self.input_id]:
            self.slots[e.key()].fill(values[e.src[1]])
        self.fired.add(self.input_id)

    def outputs_ready(self) -> bool:
        return all(self.slots[e.key()].state == "full"
                   for e in self.in_map[self.output_id])

    def take_outputs(self) -> dict[str, Value]:
        # outputs stay Full rather than Consumed: a checkpoint taken after
        # completion then still resumes straight to the same outputs
        return {e.dst[1]: self.slots[e.key()].peek()
                for e in self.in_map[self.output_id]}


@dataclass
class ExecutionState:
    frames: dict[int, Frame] = field(default_factory=dict)
    root: int = 0
    status: str = "running"  # running | done | failed | cancelled
    outputs: Optional[dict[str, Value]] = None
    error: Optional[Exception] = None
    next_frame_id: int = 0
    peak_live_frames: int = 0

    def new_frame(self, annotated: Graph, parent=None, loop=None) -> Frame:
        f = Frame.fresh(self.next_frame_id, annotated, parent, loop)
        self.next_frame_id += 1
        self.frames[f.id] = f
        self.peak_live_frames = max(self.peak_live_frames, len(self.frames))
        return f

    def drop_frame(self, frame_id: int) -> None:
        self.frames.pop(frame_id, None)
