"""Quantum stand-in worker: an analytic cost function instead of a device,
a string-level fold stub, and a sleep for scheduling experiments."""

import math
import time

from ..registry import Namespace

nsp = Namespace("mock")


@nsp.function(idempotent=True)
def run_circuit(params: list[float]) -> float:
    """Expectation-value stand-in: the product of cos(p) over the params."""
    out = 1.0
    for p in params:
        out *= math.cos(p)
    return out


@nsp.function(idempotent=True)
def zne_fold(circuit: str, factor: int) -> str:
    return f"{circuit};fold={factor}"


@nsp.function(idempotent=True)
def sleep_ms(ms: int) -> int:
    time.sleep(ms / 1000.0)
    return ms
