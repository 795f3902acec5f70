"""Gradient-descent worker driven entirely by the evaluation history.

Each descent cycle evaluates the cycle's center point, then a +h/-h probe
pair per coordinate; a coordinate steps as soon as its pair is complete, so
later probes are taken at the partially updated point (cyclic coordinate
descent). Everything is recomputed from the history on every call: the
functions are pure, so the loop can be checkpointed and replayed freely.
"""

from ..registry import Namespace

nsp = Namespace("optimizer")

PROBE_STEP = 0.1
LEARN_RATE = 0.45


def _cycle_state(history: list[tuple[list[float], float]], h: float, lr: float):
    n = len(history[0][0])
    period = 2 * n + 1
    k = len(history)
    m = (k - 1) % period
    center_i = k - 1 - m
    point = list(history[center_i][0])
    for i in range(n):
        minus_i = center_i + 2 * i + 2
        if minus_i > k - 1:
            break
        grad_i = (history[center_i + 2 * i + 1][1] - history[minus_i][1]) / (2 * h)
        point[i] -= lr * grad_i
    return n, m, point


@nsp.function(idempotent=True)
def new_params(params: list[float], cost: float,
               history: list[tuple[list[float], float]]) -> list[float]:
    """The next point to evaluate under fixed-step central-difference
    descent over the history."""
    if not history:
        return list(params)
    n, m, point = _cycle_state(history, PROBE_STEP, LEARN_RATE)
    if n == 0 or m == 2 * n:
        return point  # cycle complete: the stepped point is the next center
    coord = m // 2
    point[coord] += PROBE_STEP if m % 2 == 0 else -PROBE_STEP
    return point


@nsp.function(idempotent=True)
def converged(history: list[tuple[list[float], float]], tol: float) -> bool:
    """True once the last two cycle-start (center) costs differ by < tol."""
    if not history:
        return False
    period = 2 * len(history[0][0]) + 1
    centers = [history[i][1] for i in range(0, len(history), period)]
    return len(centers) >= 2 and abs(centers[-1] - centers[-2]) < tol
