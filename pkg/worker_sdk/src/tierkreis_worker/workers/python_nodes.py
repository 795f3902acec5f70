"""Minimal example worker: one arithmetic function."""

from ..registry import Namespace

nsp = Namespace("python_nodes")


@nsp.function(idempotent=True)
async def exponent(a: float, b: float) -> float:
    return a ** b
