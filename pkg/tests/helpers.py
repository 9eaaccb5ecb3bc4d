"""Shared oracles for the test-suite."""

import functools

import numpy as np

from z22calc.berezinian import BODY, SOUL, ber_closed
from z22calc.numeric import BindingEnv, ExprFunction
from z22calc.scalar import evaluate, function_atom, x, y
from z22calc.superfunction import SuperFunction
from z22calc.transform import CoordinateChange, compose, pullback


@functools.lru_cache(maxsize=None)
def _generic_ber_forms():
    G = CoordinateChange.generic()
    ber = ber_closed(G)
    body2 = function_atom("berbody", (x, y), slots=("u", "w"))
    soul2 = function_atom("bersoul", (x, y), slots=("u", "w"))
    second = SuperFunction({BODY: body2, SOUL: soul2}, reduced=True)
    product = ber.as_superfunction() * pullback(G, second)
    return ber, product


def multiplicativity_gap(T1: CoordinateChange, T2: CoordinateChange, X, Y) -> float:
    """max |Ber(T1 then T2) - Ber(T1) * T1^*(Ber(T2))| over the points, body and soul."""
    ber, product = _generic_ber_forms()
    composed_env = BindingEnv.for_transform(compose(T1, T2))
    b2 = ber_closed(T2)
    env = BindingEnv.for_transform(T1)
    env["berbody"] = ExprFunction(b2.body)
    env["bersoul"] = ExprFunction(b2.soul)
    gap = 0.0
    for part, mono in (("body", BODY), ("soul", SOUL)):
        lhs = evaluate(getattr(ber, part), composed_env, X, Y)
        rhs = evaluate(product.slot(mono.z, mono.xi, mono.eta), env, X, Y)
        gap = max(gap, float(np.max(np.abs(lhs - rhs))))
    return gap
