"""The example program corpus: the graphs used throughout the tests, docs,
and acceptance suite, from the one-function float pipeline up to the full
variational optimization loop."""

from __future__ import annotations

from .builder import GraphBuilder
from .graph import Graph
from .values import GraphValue


def zexp_to_parity() -> Graph:
    """f(x) = (1 - x) / 2 on floats."""
    b = GraphBuilder("zexp_to_parity")
    x = b.input("x")
    fsub = b.fn("builtin/fsub", a=b.const(1.0), b=x)
    fdiv = b.fn("builtin/fdiv", a=fsub["value"], b=b.const(2.0))
    b.output(parity=fdiv["value"])
    return b.build()


def passthrough(port: str = "v") -> Graph:
    b = GraphBuilder("passthrough")
    b.output(**{port: b.input(port)})
    return b.build()


def tag_thunk(tag: str) -> Graph:
    """Graph wrapping its input in a one-tag variant (loop break/continue)."""
    b = GraphBuilder(f"tag_{tag}")
    t = b.tag(tag, b.input("value"))
    b.output(value=t["value"])
    return b.build()


def initial_graph() -> Graph:
    """Evaluate a runner graph at x = [0.2, 0.2] and build [(x, f(x))].

    Polymorphic in the runner's output type until a concrete thunk is
    supplied.
    """
    b = GraphBuilder("initial")
    run = b.input("run")
    x = b.const([0.2, 0.2])
    ev = b.fn("builtin/eval", thunk=run, value=x)
    pair = b.fn("builtin/make_pair", first=x, second=ev["value"])
    push = b.fn("builtin/push", vec=b.const([]), item=pair["pair"])
    b.output(value=push["vec"])
    return b.build()


def run_circuit_graph() -> Graph:
    """Runner with a closure-captured circuit (the ``_c0`` input): evaluates
    the mock cost at the supplied parameters."""
    b = GraphBuilder("run_circuit")
    params = b.input("value")
    circuit = b.input("_c0")
    b.fn("builtin/discard", value=circuit)
    cost = b.fn("mock/run_circuit", params=params)
    b.output(value=cost["value"])
    return b.build()


def make_list3_graph() -> Graph:
    b = GraphBuilder("make_list")
    vec1 = b.fn("builtin/push", vec=b.const([]), item=b.input("a"))
    vec2 = b.fn("builtin/push", vec=vec1["vec"], item=b.input("b"))
    vec3 = b.fn("builtin/push", vec=vec2["vec"], item=b.input("c"))
    b.output(value=vec3["vec"])
    return b.build()


def zne_graph() -> Graph:
    """Three parallel fold operations on copies of one circuit, collected
    into a list by a boxed subgraph."""
    b = GraphBuilder("zne")
    circuit = b.input("circuit")
    folds = [b.fn("mock/zne_fold", circuit=circuit, factor=b.const(k))
             for k in (1, 3, 5)]
    box = b.box(make_list3_graph(), label="make_list(3)",
                a=folds[0]["value"], b=folds[1]["value"], c=folds[2]["value"])
    b.output(folded=box["value"])
    return b.build()


def sleep_fan_graph(ms: int = 200) -> Graph:
    """Three independent sleeps sharing one constant input and one consumer:
    wall time reveals whether the runtime parallelised them."""
    b = GraphBuilder("sleep_fan")
    ms_const = b.const(ms)
    sleeps = [b.fn("mock/sleep_ms", ms=ms_const) for _ in range(3)]
    add1 = b.fn("builtin/iadd", a=sleeps[0]["value"], b=sleeps[1]["value"])
    add2 = b.fn("builtin/iadd", a=add1["value"], b=sleeps[2]["value"])
    b.output(total=add2["value"])
    return b.build()


def variational_body() -> Graph:
    """One optimization step: extend the history with the next evaluation,
    then break once the convergence test passes.

    Inputs: ``value`` (the history) and the closure-captured ``_c0``
    (tolerance). Output: ``continue``/``break`` variant of the new history.
    """
    b = GraphBuilder("loop_def")
    history = b.input("value")
    tol = b.input("_c0")
    popped = b.fn("builtin/pop", vec=history)
    b.fn("builtin/discard", value=popped["vec"])
    last = b.fn("builtin/unpack_pair", pair=popped["item"])
    nxt = b.fn("optimizer/new_params", params=last["first"], cost=last["second"],
               history=history)
    cost = b.fn("mock/run_circuit", params=nxt["value"])
    pair = b.fn("builtin/make_pair", first=nxt["value"], second=cost["value"])
    grown = b.fn("builtin/push", vec=history, item=pair["pair"])
    conv = b.fn("optimizer/converged", history=grown["vec"], tol=tol)
    chosen = b.fn("builtin/switch", pred=conv["value"],
                  if_true=b.const(GraphValue(tag_thunk("break"))),
                  if_false=b.const(GraphValue(tag_thunk("continue"))))
    step = b.fn("builtin/eval", thunk=chosen["value"], value=grown["vec"])
    b.output(value=step["value"])
    return b.build()


def variational_main(tol: float = 1e-6) -> Graph:
    """The whole variational program: seed the history via ``initial`` with a
    closure-applied runner, iterate the optimization body to convergence,
    and return the final parameters and cost."""
    b = GraphBuilder("main")
    runner = b.fn("builtin/partial", thunk=b.const(GraphValue(run_circuit_graph())),
                  _c0=b.const("mock-circuit"))
    seed = b.box(initial_graph(), label="initial", run=runner["value"])
    body = b.fn("builtin/partial", thunk=b.const(GraphValue(variational_body())),
                _c0=b.const(tol))
    final = b.fn("builtin/loop", body=body["value"], value=seed["value"])
    popped = b.fn("builtin/pop", vec=final["value"])
    b.fn("builtin/discard", value=popped["vec"])
    last = b.fn("builtin/unpack_pair", pair=popped["item"])
    b.output(params=last["first"], cost=last["second"])
    return b.build()


def counting_body(limit: int) -> Graph:
    """continue(v + 1) while v < limit, else break(v)."""
    b = GraphBuilder("count_body")
    v = b.input("value")
    lt = b.fn("builtin/ilt", a=v, b=b.const(limit))
    inc = b.fn("builtin/iadd", a=v, b=b.const(1))
    chosen = b.fn("builtin/switch", pred=lt["value"],
                  if_true=b.const(GraphValue(tag_thunk("continue"))),
                  if_false=b.const(GraphValue(tag_thunk("break"))))
    next_v = b.fn("builtin/switch", pred=lt["value"], if_true=inc["value"], if_false=v)
    step = b.fn("builtin/eval", thunk=chosen["value"], value=next_v["value"])
    b.output(value=step["value"])
    return b.build()


def counting_loop(limit: int, start: int = 0) -> Graph:
    b = GraphBuilder("count_loop")
    lp = b.fn("builtin/loop", body=b.const(GraphValue(counting_body(limit))),
              value=b.const(start))
    b.output(n=lp["value"])
    return b.build()


def corpus() -> dict[str, tuple[Graph, dict]]:
    """Named corpus graphs with runnable example inputs (mock index)."""
    from .values import value_of

    return {
        "zexp_to_parity": (zexp_to_parity(), {"x": value_of(0.2)}),
        "initial_applied": (_initial_applied(), {}),
        "zne": (zne_graph(), {"circuit": value_of("c0")}),
        "sleep_fan": (sleep_fan_graph(20), {}),
        "counting_loop": (counting_loop(5), {}),
        "variational_main": (variational_main(), {}),
    }


def _initial_applied() -> Graph:
    b = GraphBuilder("initial_applied")
    runner = b.fn("builtin/partial", thunk=b.const(GraphValue(run_circuit_graph())),
                  _c0=b.const("mock-circuit"))
    seed = b.box(initial_graph(), label="initial", run=runner["value"])
    b.output(value=seed["value"])
    return b.build()
