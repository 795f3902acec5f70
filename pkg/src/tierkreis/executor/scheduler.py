"""The firing loop: dispatch ready nodes, manage frames, enforce checks.

A single coordinator thread owns the ExecutionState. Pure host functions and
remote calls run on a worker pool (or inline when max_concurrency is 1,
which gives the deterministic sequential debugging mode); eval/loop/box/
match/tag manipulate frames directly in the coordinator. A node's input
slots are consumed when its outputs are committed, so work abandoned by
cancel or recorded in-flight at checkpoint time simply re-fires on resume;
worker functions are required to be effectively idempotent for this reason.
"""

from __future__ import annotations

import contextvars
import random
import threading
from concurrent.futures import FIRST_COMPLETED, Future, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from typing import Callable, Optional

from ..builtins import HostFnError
from ..graph import (BoxNode, ConstNode, FunctionNode, Graph, InputNode,
                     MatchNode, Node, OutputNode, TagNode)
from ..signatures import FunctionDecl, SignatureIndex
from ..typesys import TypeCheckFailure, check_value, infer_graph
from ..builtins import partial_apply
from ..values import GraphValue, Value, VariantValue, kind_name
from .errors import (Cancelled, ExecError, InputMismatch, MaxIterations,
                     OutputTypeViolation, UnhandledTag, WorkerError)
from .state import ExecutionState, Frame, LoopState

LoopBoundaryHook = Callable[["Job", Frame], None]


@dataclass
class RunOptions:
    max_concurrency: int = 4
    max_loop_iters: Optional[int] = None
    schedule_seed: Optional[int] = None  # shuffle ready order (confluence tests)
    on_loop_boundary: Optional[LoopBoundaryHook] = None


@dataclass
class ExecutionPlan:
    graph: Graph  # annotated
    inputs: dict[str, Value]
    index: SignatureIndex


def prepare(graph: Graph, inputs: dict[str, Value], index: SignatureIndex) -> ExecutionPlan:
    """Type-check the graph, the supplied inputs, and function resolution.

    Raises TypeCheckFailure (with located violations, including
    UnknownFunction) or InputMismatch; nothing executes on failure.
    """
    result = infer_graph(graph, index)
    result.raise_on_error()
    row = result.inputs.to_dict()
    missing = sorted(set(row) - set(inputs))
    extra = sorted(set(inputs) - set(row))
    if missing:
        raise InputMismatch(f"missing input(s): {missing}")
    if extra:
        raise InputMismatch(f"unexpected input(s): {extra}")
    for label in sorted(row):
        bad = check_value(inputs[label], row[label], index)
        if bad is not None:
            raise InputMismatch(f"input {label!r}: {bad}")
    return ExecutionPlan(result.graph, dict(inputs), index)


class Job:
    """One graph execution: submit, await, checkpoint, cancel.

    The coordinator loop runs in whatever thread calls :meth:`run` (or the
    thread started by :meth:`start`); control methods are thread-safe.
    """

    def __init__(self, plan: ExecutionPlan, options: Optional[RunOptions] = None):
        self.plan = plan
        self.options = options or RunOptions()
        self.index = plan.index
        self.state = ExecutionState()
        self._init_machinery()

        root = self.state.new_frame(plan.graph)
        root.seed_inputs(plan.inputs)
        self.state.root = root.id

    @classmethod
    def resumed(cls, state: ExecutionState, index: SignatureIndex,
                options: Optional[RunOptions] = None) -> "Job":
        """A Job continuing from a restored ExecutionState."""
        job = cls.__new__(cls)
        job.plan = None
        job.options = options or RunOptions()
        job.index = index
        job.state = state
        state.status = "running"
        state.error = None
        job._init_machinery()
        return job

    def _init_machinery(self) -> None:
        self._rng = (random.Random(self.options.schedule_seed)
                     if self.options.schedule_seed is not None else None)
        self._cancel = threading.Event()
        self._ckpt_lock = threading.Lock()
        self._ckpt_waiters: list[tuple[threading.Event, list]] = []
        self._pool: Optional[ThreadPoolExecutor] = None
        self._in_flight: dict[Future, tuple[int, int]] = {}
        self._inferred: dict[Graph, Graph] = {}
        self._thread: Optional[threading.Thread] = None
        self._done = threading.Event()
        self.fire_log: list[tuple[int, int]] = []

    # -- control surface (any thread) --------------------------------------

    def start(self) -> "Job":
        self._thread = threading.Thread(target=self._run_guarded, daemon=True)
        self._thread.start()
        return self

    def cancel(self) -> None:
        self._cancel.set()

    def wait(self, timeout: Optional[float] = None) -> bool:
        return self._done.wait(timeout)

    def checkpoint(self) -> bytes:
        """Snapshot at the next quiescent instant (immediately if terminal)."""
        from .checkpoint import checkpoint_bytes

        if self.state.status != "running" or self._thread is None or not self._thread.is_alive():
            return checkpoint_bytes(self.state)
        ev = threading.Event()
        cell: list = []
        with self._ckpt_lock:
            self._ckpt_waiters.append((ev, cell))
        ev.wait()
        if not cell:
            raise ExecError("checkpoint failed: job terminated first")
        return cell[0]

    # -- coordinator --------------------------------------------------------

    def run(self) -> dict[str, Value]:
        try:
            outputs = self._loop()
        except Cancelled as e:
            self.state.status = "cancelled"
            self.state.error = e
            raise
        except Exception as e:
            self.state.status = "failed"
            self.state.error = e
            raise
        else:
            self.state.status = "done"
            self.state.outputs = outputs
            return outputs
        finally:
            self._flush_checkpoint_waiters(final=True)
            if self._pool is not None:
                self._pool.shutdown(wait=False)
            self._done.set()

    def _run_guarded(self) -> None:
        try:
            self.run()
        except Exception:
            pass  # status/error recorded on state; surfaced via result()

    def result(self) -> dict[str, Value]:
        self._done.wait()
        if self.state.status == "done":
            return self.state.outputs
        raise self.state.error

    def _loop(self) -> dict[str, Value]:
        while True:
            if self._cancel.is_set():
                # abandon in-flight work: inputs were not consumed, so those
                # nodes are simply unfired in any later checkpoint
                self._in_flight.clear()
                raise Cancelled()

            root_outputs = self._sweep_frames()
            if root_outputs is not None:
                return root_outputs

            draining = bool(self._ckpt_waiters)
            dispatched = 0 if draining else self._dispatch_ready()

            if self._in_flight:
                done, _ = wait(list(self._in_flight), timeout=0.05,
                               return_when=FIRST_COMPLETED)
                for fut in done:
                    frame_id, node_id = self._in_flight.pop(fut)
                    self._absorb_result(frame_id, node_id, fut)
            elif draining:
                self._flush_checkpoint_waiters()
            elif dispatched == 0:
                if not any(f.outputs_ready() for f in self.state.frames.values()):
                    raise ExecError("stuck: no fireable nodes and no pending work "
                                    "(inconsistent resume state?)")

    def _flush_checkpoint_waiters(self, final: bool = False) -> None:
        from .checkpoint import checkpoint_bytes

        with self._ckpt_lock:
            waiters, self._ckpt_waiters = self._ckpt_waiters, []
        if not waiters:
            return
        snapshot = checkpoint_bytes(self.state)
        for ev, cell in waiters:
            cell.append(snapshot)
            ev.set()

    # -- readiness & dispatch ----------------------------------------------

    def _awaiting(self) -> set[tuple[int, int]]:
        return {f.parent for f in self.state.frames.values() if f.parent is not None}

    def _ready_nodes(self) -> list[tuple[int, int]]:
        busy = set(self._in_flight.values()) | self._awaiting()
        ready = []
        for f in sorted(self.state.frames.values(), key=lambda f: f.id):
            for n in f.graph.nodes:
                if isinstance(n.kind, (InputNode, OutputNode)):
                    continue
                if n.id in f.fired or (f.id, n.id) in busy:
                    continue
                if all(f.slots[e.key()].state == "full" for e in f.in_map[n.id]):
                    ready.append((f.id, n.id))
        return ready

    def _dispatch_ready(self) -> int:
        ready = self._ready_nodes()
        if self._rng is not None:
            self._rng.shuffle(ready)
        capacity = max(1, self.options.max_concurrency) - len(self._in_flight)
        fired = 0
        for frame_id, node_id in ready:
            if capacity <= 0:
                break
            frame = self.state.frames[frame_id]
            node = frame.nodes_by_id[node_id]
            self.fire_log.append((frame_id, node_id))
            fired += 1
            if self._fire(frame, node):
                capacity -= 1
        return fired

    def _fire(self, frame: Frame, node: Node) -> bool:
        """Start one node; True if it occupies a pool slot."""
        kind = node.kind
        ins = {e.dst[1]: frame.slots[e.key()].peek() for e in frame.in_map[node.id]}

        if isinstance(kind, ConstNode):
            self._commit(frame, node, {"value": kind.value}, "const")
            return False
        if isinstance(kind, TagNode):
            self._commit(frame, node, {"value": VariantValue(kind.tag, ins["value"])}, "tag")
            return False
        if isinstance(kind, MatchNode):
            self._fire_match(frame, node, ins)
            return False
        if isinstance(kind, BoxNode):
            child_graph = self._child_annotated(kind.graph, "box", frame, node)
            child = self.state.new_frame(child_graph, parent=(frame.id, node.id))
            child.seed_inputs(ins)
            return False
        if isinstance(kind, FunctionNode):
            decl = self.index.lookup(kind.name)
            if decl is None:
                raise WorkerError(kind.name, "no longer provided by any worker",
                                  self._chain(frame, node))
            if decl.executor_handled:
                if kind.name == "builtin/eval":
                    self._fire_eval(frame, node, ins)
                elif kind.name == "builtin/loop":
                    self._fire_loop(frame, node, ins)
                else:
                    raise WorkerError(kind.name, "executor does not implement this control",
                                      self._chain(frame, node))
                return False
            if self.options.max_concurrency <= 1:
                outputs = self._call(decl, ins, frame, node)
                self._commit(frame, node, outputs, decl.name)
                return False
            # copy_context so forwarded remote calls keep e.g. the job id
            ctx = contextvars.copy_context()
            fut = self._ensure_pool().submit(ctx.run, self._call, decl, ins, frame, node)
            self._in_flight[fut] = (frame.id, node.id)
            return True
        raise ExecError(f"cannot fire node kind {type(kind).__name__}")

    def _ensure_pool(self) -> ThreadPoolExecutor:
        if self._pool is None:
            self._pool = ThreadPoolExecutor(max_workers=self.options.max_concurrency)
        return self._pool

    def _call(self, decl: FunctionDecl, ins: dict[str, Value],
              frame: Frame, node: Node) -> dict[str, Value]:
        try:
            return decl.impl(ins)
        except HostFnError as e:
            raise WorkerError(decl.name, f"{e.kind}: {e.message}", self._chain(frame, node))
        except ExecError:
            raise
        except Exception as e:
            raise WorkerError(decl.name, f"{type(e).__name__}: {e}", self._chain(frame, node))

    def _absorb_result(self, frame_id: int, node_id: int, fut: Future) -> None:
        frame = self.state.frames.get(frame_id)
        if frame is None:
            return
        node = frame.nodes_by_id[node_id]
        outputs = fut.result()  # propagates WorkerError etc.
        name = node.kind.name if isinstance(node.kind, FunctionNode) else "node"
        self._commit(frame, node, outputs, name)

    def _commit(self, frame: Frame, node: Node, outputs: dict[str, Value],
                fn_name: str) -> None:
        """Post-check outputs against edge types, consume inputs, fill edges."""
        for e in frame.out_map[node.id]:
            port = e.src[1]
            if port not in outputs:
                raise OutputTypeViolation(fn_name, port, "declared output not produced")
            if e.ty is not None:
                bad = check_value(outputs[port], e.ty, self.index)
                if bad is not None:
                    raise OutputTypeViolation(fn_name, f"{port}{bad.loc.value_path}",
                                              f"expected {bad.expected}, got {bad.actual}")
        for e in frame.in_map[node.id]:
            frame.slots[e.key()].consume()
        for e in frame.out_map[node.id]:
            frame.slots[e.key()].fill(outputs[e.src[1]])
        frame.fired.add(node.id)

    # -- control-flow nodes ---------------------------------------------------

    def _child_annotated(self, g: Graph, what: str, frame: Frame, node: Node) -> Graph:
        cached = self._inferred.get(g)
        if cached is not None:
            return cached
        result = infer_graph(g, self.index)
        if not result.ok:
            raise WorkerError(f"builtin/{what}" if what in ("eval", "loop") else what,
                              "graph value does not type-check: "
                              + "; ".join(str(v) for v in result.errors[:3]),
                              self._chain(frame, node))
        self._inferred[g] = result.graph
        return result.graph

    def _fire_eval(self, frame: Frame, node: Node, ins: dict[str, Value]) -> None:
        thunk = ins.get("thunk")
        if not isinstance(thunk, GraphValue):
            raise WorkerError("builtin/eval", f"thunk is {kind_name(thunk)}, not a graph",
                              self._chain(frame, node))
        args = {k: v for k, v in ins.items() if k != "thunk"}
        child_graph = self._child_annotated(thunk.graph, "eval", frame, node)
        ports = set(child_graph.input_ports())
        if ports != set(args):
            raise WorkerError("builtin/eval",
                              f"thunk inputs {sorted(ports)} != supplied {sorted(args)}",
                              self._chain(frame, node))
        in_id = child_graph.input_node().id
        for e in child_graph.out_edges(in_id):
            if e.ty is not None:
                bad = check_value(args[e.src[1]], e.ty, self.index)
                if bad is not None:
                    raise WorkerError("builtin/eval",
                                      f"input {e.src[1]!r}: expected {bad.expected}, "
                                      f"got {bad.actual}", self._chain(frame, node))
        child = self.state.new_frame(child_graph, parent=(frame.id, node.id))
        child.seed_inputs(args)

    def _fire_loop(self, frame: Frame, node: Node, ins: dict[str, Value]) -> None:
        body = ins.get("body")
        if not isinstance(body, GraphValue):
            raise WorkerError("builtin/loop", f"body is {kind_name(body)}, not a graph",
                              self._chain(frame, node))
        self._spawn_loop_body(frame, node, body.graph, ins["value"], 0)

    def _spawn_loop_body(self, frame: Frame, node: Node, body: Graph,
                         value: Value, iteration: int) -> None:
        cap = self.options.max_loop_iters
        if cap is not None and iteration >= cap:
            raise MaxIterations(f"loop exceeded {cap} iterations",
                                self._chain(frame, node))
        child_graph = self._child_annotated(body, "loop", frame, node)
        if child_graph.input_ports() != ["value"]:
            raise WorkerError("builtin/loop",
                              f"body inputs must be ['value'], got {child_graph.input_ports()}",
                              self._chain(frame, node))
        if child_graph.output_ports() != ["value"]:
            raise WorkerError("builtin/loop",
                              f"body outputs must be ['value'], got {child_graph.output_ports()}",
                              self._chain(frame, node))
        child = self.state.new_frame(child_graph, parent=(frame.id, node.id),
                                     loop=LoopState(iteration, value))
        child.seed_inputs({"value": value})
        if self.options.on_loop_boundary is not None:
            self.options.on_loop_boundary(self, child)

    def _fire_match(self, frame: Frame, node: Node, ins: dict[str, Value]) -> None:
        variant = ins["variant"]
        if not isinstance(variant, VariantValue):
            raise WorkerError("match", f"variant input is {kind_name(variant)}",
                              self._chain(frame, node))
        if variant.tag not in ins:
            raise UnhandledTag(f"match has no handler for tag {variant.tag!r}",
                               self._chain(frame, node))
        handler = ins[variant.tag]
        if not isinstance(handler, GraphValue):
            raise WorkerError("match", f"handler {variant.tag!r} is {kind_name(handler)}",
                              self._chain(frame, node))
        try:
            thunk = partial_apply(handler.graph, {"value": variant.value})
        except HostFnError as e:
            raise WorkerError("match", f"{e.kind}: {e.message}", self._chain(frame, node))
        self._commit(frame, node, {"thunk": GraphValue(thunk)}, "match")

    # -- frame completion -----------------------------------------------------

    def _sweep_frames(self) -> Optional[dict[str, Value]]:
        """Deliver completed frames to their parents; root outputs end the run."""
        while True:
            done = [f for f in self.state.frames.values() if f.outputs_ready()]
            if not done:
                return None
            for f in done:
                outputs = f.take_outputs()
                if f.parent is None:
                    return outputs
                self._deliver(f, outputs)

    def _deliver(self, child: Frame, outputs: dict[str, Value]) -> None:
        pf_id, node_id = child.parent
        parent = self.state.frames[pf_id]
        node = parent.nodes_by_id[node_id]
        self.state.drop_frame(child.id)

        if isinstance(node.kind, FunctionNode) and node.kind.name == "builtin/loop":
            out = outputs.get("value")
            if not isinstance(out, VariantValue):
                raise WorkerError("builtin/loop",
                                  f"body returned {kind_name(out)}, expected a variant",
                                  self._chain(parent, node))
            if out.tag == "continue":
                self._spawn_loop_body(parent, node, child.graph, out.value,
                                      child.loop.iteration + 1)
                return
            if out.tag == "break":
                self._commit(parent, node, {"value": out.value}, "builtin/loop")
                return
            raise WorkerError("builtin/loop", f"body returned unexpected tag {out.tag!r}",
                              self._chain(parent, node))

        # eval or box: child outputs feed the node's out-edges
        name = (node.kind.name if isinstance(node.kind, FunctionNode)
                else f"box:{node.kind.label or ''}")
        for e in parent.out_map[node.id]:
            if e.src[1] not in outputs:
                raise WorkerError(name, f"graph produced no output {e.src[1]!r}",
                                  self._chain(parent, node))
        self._commit(parent, node, outputs, name)

    def _chain(self, frame: Frame, node: Node) -> list[str]:
        """Located error chain: node plus the stack of parent activations."""
        chain = [f"node {node.id} in frame {frame.id}"]
        f = frame
        while f.parent is not None:
            pf_id, node_id = f.parent
            f = self.state.frames[pf_id]
            chain.append(f"from node {node_id} in frame {f.id}")
        return chain


def run_graph(graph: Graph, inputs: dict[str, Value], index: SignatureIndex,
              options: Optional[RunOptions] = None) -> dict[str, Value]:
    """Prepare and execute in the calling thread; returns the outputs."""
    return Job(prepare(graph, inputs, index), options).run()
