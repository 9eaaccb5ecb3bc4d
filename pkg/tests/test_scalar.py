import numpy as np
import pytest
import sympy as sp

from z22calc.numeric import BindingEnv, BumpFunction, ExprFunction
from z22calc.scalar import (
    DivisionNearZero,
    PoleAtOrigin,
    UnboundAtom,
    ZeroDenominator,
    all_atoms,
    bind_and_eval,
    depends_on_y,
    diff,
    equal,
    evaluate,
    function_atom,
    function_atoms,
    is_zero,
    laurent_coefficient,
    normalize,
    restrict_y0,
    series_y,
    substitute,
    to_text,
    x,
    y,
)

f = function_atom("tf", slots=("x", "y"))
g = function_atom("tg", (x,), slots=("u",))


def test_atom_names_and_identity():
    assert str(f) == "tf"
    assert function_atom("tf", slots=("x", "y")) is f or function_atom("tf", slots=("x", "y")) == f
    a = function_atom("tg", (f,), slots=("u",), index=(2,))
    assert str(a) == "tg_uu(tf)"
    assert a.base == "tg" and a.index == (2,) and a.atom_args == (f,)


def test_slot_names_are_fixed():
    with pytest.raises(ValueError):
        function_atom("tf", slots=("u", "w"))


def test_chain_rule_through_nested_atoms():
    h = function_atom("tg", (f,), slots=("u",))
    d = diff(h, x)
    assert equal(d, function_atom("tg", (f,), slots=("u",), index=(1,)) * function_atom("tf", index=(1, 0)))
    assert diff(h * y, y) == h + y * diff(h, y)


def test_diff_matches_sympy_for_plain_expressions():
    e = x**3 * y / (1 + x * y)
    assert equal(diff(e, x), sp.diff(e, x))
    assert equal(diff(e, y), sp.diff(e, y))


def test_substitute_is_simultaneous_and_recursive():
    e = x + y * function_atom("tg", (x + y,), slots=("u",))
    out = substitute(e, {x: y, y: x})
    assert equal(out, y + x * function_atom("tg", (x + y,), slots=("u",)))
    assert restrict_y0(function_atom("tg", (x + y,), slots=("u",))) == g


def test_atom_sets():
    h = function_atom("tg", (f,), slots=("u",))
    assert function_atoms(h * x) == {h}
    assert all_atoms(h) == {h, f}
    assert depends_on_y(h)
    assert not depends_on_y(g * x)


def test_normal_forms():
    e = (x**2 - y**2) / (x - y)
    assert normalize(e) == x + y
    assert is_zero(e - x - y)
    assert equal(f / f, 1)
    assert to_text(2 * y + 1 + y) == "3*y + 1"
    with pytest.raises(ZeroDenominator):
        normalize(x / (y - y))


def test_series_of_rational_function():
    e = (1 + x) / (1 - x * y) ** 2
    ref = sp.series(e, y, 0, 5).removeO()
    got = series_y(e, 4)
    for r, c in enumerate(got):
        assert equal(c, ref.coeff(y, r))


def test_series_of_composed_atom():
    # tg(x + y + y^2) = tg + tg'(y + y^2) + tg''/2 (y + y^2)^2 + ...
    h = function_atom("tg", (x + y + y**2,), slots=("u",))
    g1 = function_atom("tg", (x,), slots=("u",), index=(1,))
    g2 = function_atom("tg", (x,), slots=("u",), index=(2,))
    g3 = function_atom("tg", (x,), slots=("u",), index=(3,))
    c = series_y(h, 3)
    assert c[0] == g
    assert equal(c[1], g1)
    assert equal(c[2], g1 + g2 / 2)
    assert equal(c[3], g2 + g3 / 6)


def test_series_pole_detection():
    with pytest.raises(PoleAtOrigin):
        series_y(1 / y + x, 2)
    assert equal(laurent_coefficient((1 + y) ** 2 / y**2, -1), 2)
    assert laurent_coefficient(x / y, -2) == 0


def test_series_cancelling_pole():
    # the pole cancels, so the Taylor series exists
    e = ((1 + y) ** 2 - 1) / y
    assert [sp.simplify(c) for c in series_y(e, 2)] == [2, 1, 0]


def test_evaluate_nested_atoms():
    env = BindingEnv({"tf": ExprFunction(x + y**2), "tg": ExprFunction(sp.sin(x), (x,))})
    h = function_atom("tg", (f,), slots=("u",))
    hx = diff(h, x)
    xs, ys = np.linspace(-1, 1, 5), np.linspace(0, 1, 5)
    assert np.allclose(evaluate(h, env, xs, ys), np.sin(xs + ys**2))
    assert np.allclose(evaluate(hx, env, xs, ys), np.cos(xs + ys**2))


def test_evaluate_with_bump():
    b = BumpFunction(0.0, 1.0)
    env = BindingEnv({"tg": b})
    xs = np.array([-2.0, 0.0, 0.5])
    assert np.allclose(evaluate(g, env, xs, 0 * xs), [0.0, np.exp(-1), np.exp(-1 / 0.75)])


def test_unbound_atom():
    with pytest.raises(UnboundAtom):
        evaluate(f + 1, {}, np.zeros(2), np.zeros(2))


def test_bind_and_eval_guards_denominators():
    env = BindingEnv({"tf": ExprFunction(x - 1)})
    assert bind_and_eval(1 / (1 + f), env, (0.5, 0.0)) == pytest.approx(1 / 0.5)
    with pytest.raises(DivisionNearZero):
        bind_and_eval(1 / f, env, (1.0, 0.0))
