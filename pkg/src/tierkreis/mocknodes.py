"""In-process stand-in workers under the ``mock`` and ``optimizer``
namespaces: an analytic cost function in place of real circuit execution, a
history-driven gradient-descent step, and timing/folding stubs.

These are host-function doubles so the example programs run without any
external worker process (``tk run --mocks``). The worker SDK ships
independently implemented equivalents behind the same signatures.
"""

from __future__ import annotations

import math
import time

from .builtins import HostFnError, builtin_index
from .signatures import FunctionDecl, SignatureIndex, index_of
from .typesys.exprs import BOOL, FLOAT, INT, STR, PairType, Row, TypeScheme, VecType
from .values import (FloatValue, IntValue, PairValue, StrValue, Value,
                     VecValue, kind_name)

PROBE_STEP = 0.1
LEARN_RATE = 0.45

_HISTORY_T = VecType(PairType(VecType(FLOAT), FLOAT))


def _floats(v: Value, port: str) -> list[float]:
    if not isinstance(v, VecValue) or not all(isinstance(x, FloatValue) for x in v.items):
        raise HostFnError("FunctionFailed", f"port {port!r}: expected Vec(Float)")
    return [x.value for x in v.items]


def _history(v: Value, port: str) -> list[tuple[list[float], float]]:
    if not isinstance(v, VecValue):
        raise HostFnError("FunctionFailed", f"port {port!r}: expected Vec(Pair(Vec(Float), Float))")
    out = []
    for item in v.items:
        if not isinstance(item, PairValue):
            raise HostFnError("FunctionFailed", f"port {port!r}: expected pairs, got {kind_name(item)}")
        out.append((_floats(item.first, port), item.second.value))
    return out


def cost_function(params: list[float]) -> float:
    """Analytic expectation-value stand-in: the product of cos(p_i)."""
    out = 1.0
    for p in params:
        out *= math.cos(p)
    return out


def descent_step(params: list[float], history: list[tuple[list[float], float]],
                 h: float = PROBE_STEP, lr: float = LEARN_RATE) -> list[float]:
    """Next point to evaluate under cyclic coordinate descent with central
    finite differences.

    Each cycle evaluates the center, then +/-h probes per coordinate;
    coordinate i steps as soon as its probe pair is in, so later probes are
    taken at the partially updated point. The whole schedule is recomputed
    from the history, keeping the function pure.
    """
    n = len(params)
    if n == 0:
        return []
    period = 2 * n + 1
    k = len(history)
    m = (k - 1) % period
    center_i = k - 1 - m
    work = list(history[center_i][0])
    for i in range(n):
        minus_i = center_i + 2 * i + 2
        if minus_i <= k - 1:
            g = (history[center_i + 2 * i + 1][1] - history[minus_i][1]) / (2 * h)
            work[i] -= lr * g
        else:
            break
    if m == 2 * n:
        return work  # cycle complete: the fully stepped point is the next center
    coord = m // 2
    work[coord] += h if m % 2 == 0 else -h
    return work


def center_costs(history: list[tuple[list[float], float]]) -> list[float]:
    """Costs of the cycle-start (center) evaluations."""
    if not history:
        return []
    period = 2 * len(history[0][0]) + 1
    return [history[i][1] for i in range(0, len(history), period)]


def _run_circuit(i):
    return {"value": FloatValue(cost_function(_floats(i["params"], "params")))}


def _new_params(i):
    params = _floats(i["params"], "params")
    history = _history(i["history"], "history")
    if not history:
        raise HostFnError("FunctionFailed", "new_params requires a non-empty history")
    return {"value": VecValue(FloatValue(x) for x in descent_step(params, history))}


def _converged(i):
    history = _history(i["history"], "history")
    tol = i["tol"]
    if not isinstance(tol, FloatValue):
        raise HostFnError("FunctionFailed", "port 'tol': expected Float")
    costs = center_costs(history)
    done = len(costs) >= 2 and abs(costs[-1] - costs[-2]) < tol.value
    from .values import BoolValue

    return {"value": BoolValue(done)}


def _zne_fold(i):
    circuit, factor = i["circuit"], i["factor"]
    if not isinstance(circuit, StrValue) or not isinstance(factor, IntValue):
        raise HostFnError("FunctionFailed", "zne_fold wants (circuit: Str, factor: Int)")
    return {"value": StrValue(f"{circuit.value};fold={factor.value}")}


def _sleep_ms(i):
    ms = i["ms"]
    if not isinstance(ms, IntValue):
        raise HostFnError("FunctionFailed", "port 'ms': expected Int")
    time.sleep(ms.value / 1000.0)
    return {"value": IntValue(ms.value)}


def _mono(ins: dict, outs: dict) -> TypeScheme:
    return TypeScheme((), (), Row.closed(ins), Row.closed(outs))


def mock_decls() -> list[FunctionDecl]:
    return [
        FunctionDecl("mock/run_circuit", _mono({"params": VecType(FLOAT)}, {"value": FLOAT}),
                     _run_circuit, idempotent=True),
        FunctionDecl("mock/zne_fold", _mono({"circuit": STR, "factor": INT}, {"value": STR}),
                     _zne_fold, idempotent=True),
        FunctionDecl("mock/sleep_ms", _mono({"ms": INT}, {"value": INT}),
                     _sleep_ms, idempotent=True),
        FunctionDecl("optimizer/new_params",
                     _mono({"params": VecType(FLOAT), "cost": FLOAT, "history": _HISTORY_T},
                           {"value": VecType(FLOAT)}),
                     _new_params, idempotent=True),
        FunctionDecl("optimizer/converged",
                     _mono({"history": _HISTORY_T, "tol": FLOAT}, {"value": BOOL}),
                     _converged, idempotent=True),
    ]


def mock_index() -> SignatureIndex:
    """Builtins plus the mock/optimizer doubles."""
    return builtin_index().merged_with(index_of(mock_decls()), other_source="mocknodes")
