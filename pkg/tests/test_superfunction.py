"""Superfunction ring: algebra laws, derivatives, inverses and the eight-slot form."""

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import homogeneous
from z22calc.graded import COORDINATE_DEGREES, Degree, Monomial, sign
from z22calc.scalar import equal, function_atom, x, y
from z22calc.superfunction import (
    EightComponentForm,
    LaurentNotSupported,
    OutOfWindow,
    SuperFunction,
    component_atom,
    coordinate,
    from_xy_form,
    generic_function,
    to_xy_form,
)

LAWS = settings(max_examples=200)
COORDS = ("x", "z", "xi", "eta")
GEN = {"x": SuperFunction.constant(x, reduced=False), "z": SuperFunction({Monomial(1): 1}),
       "xi": SuperFunction({Monomial(0, 1): 1}), "eta": SuperFunction({Monomial(0, 0, 1): 1})}


def deg(F):
    d = F.degree()
    return d if d is not None else Degree(0, 0)


# -- algebra laws -----------------------------------------------------------


@LAWS
@given(homogeneous(), homogeneous())
def test_graded_commutativity(F, G):
    assert (F * G).equals((G * F).scale(sign(deg(F), deg(G))))


@LAWS
@given(homogeneous(reduced=True), homogeneous(reduced=True))
def test_graded_commutativity_reduced(F, G):
    assert (F * G).equals((G * F).scale(sign(deg(F), deg(G))))


@LAWS
@given(homogeneous(), homogeneous(), homogeneous())
def test_associativity(F, G, H):
    assert ((F * G) * H).equals(F * (G * H))


@LAWS
@given(homogeneous(reduced=True), homogeneous(reduced=True), homogeneous(reduced=True))
def test_associativity_reduced(F, G, H):
    assert ((F * G) * H).equals(F * (G * H))


@LAWS
@given(st.sampled_from(COORDS), homogeneous(), homogeneous())
def test_leibniz(c, F, G):
    s = sign(COORDINATE_DEGREES[c], deg(F))
    lhs = (F * G).deriv(c)
    rhs = F.deriv(c) * G + (F * G.deriv(c)).scale(s)
    assert lhs.equals(rhs)


@LAWS
@given(st.sampled_from(COORDS), homogeneous(reduced=True), homogeneous(reduced=True))
def test_leibniz_reduced(c, F, G):
    s = sign(COORDINATE_DEGREES[c], deg(F))
    assert (F * G).deriv(c).equals(F.deriv(c) * G + (F * G.deriv(c)).scale(s))


@LAWS
@given(st.sampled_from(COORDS), st.sampled_from(COORDS), homogeneous())
def test_derivative_coordinate_bracket(X, Y, F):
    # [d_X, Y] F = d_X(Y F) - (-1)^{deg X . deg Y} Y d_X F = delta_XY F
    s = sign(COORDINATE_DEGREES[X], COORDINATE_DEGREES[Y])
    bracket = (GEN[Y] * F).deriv(X) - (GEN[Y] * F.deriv(X)).scale(s)
    expected = F if X == Y else SuperFunction()
    assert bracket.equals(expected)


@LAWS
@given(homogeneous())
def test_fermionic_derivatives_square_to_zero(F):
    assert not F.deriv("xi").deriv("xi").simplify()
    assert F.deriv("xi").deriv("eta").equals(F.deriv("eta").deriv("xi"))


# -- concrete checks ---------------------------------------------------------------


def test_left_derivative_sign_through_z():
    # d_xi (z xi) = -z: xi has to be brought to the left past z first
    F = SuperFunction({Monomial(1, 1, 0): 1})
    assert F.deriv("xi").equals(SuperFunction({Monomial(1): -1}))
    G = SuperFunction({Monomial(2, 1, 1): x})
    assert G.deriv("eta").equals(SuperFunction({Monomial(2, 1, 0): x}))


def test_reduced_z_derivative():
    F = SuperFunction({Monomial(0): y**2 * x, Monomial(1): y}, reduced=True)
    # d/dz (x z^4 + z^3) = 4 x z^3 + 3 z^2
    assert F.deriv("z").equals(SuperFunction({Monomial(1): 4 * x * y, Monomial(0): 3 * y}, reduced=True))


def test_reduce_folds_even_powers():
    F = SuperFunction({Monomial(3, 1, 0): x, Monomial(2): 1, Monomial(-1): 5}, laurent_depth=1)
    R = F.reduce()
    assert R.slot(1, 1, 0) == x * y
    assert R.slot(0, 0, 0) == y
    assert equal(R.slot(1, 0, 0), 5 / y)


def test_series_truncation_window():
    F = SuperFunction({Monomial(k): 1 for k in range(6)}, trunc=3)
    assert set(m.z for m in F.terms) == {0, 1, 2, 3}
    with pytest.raises(OutOfWindow):
        F.coefficient(4, 0, 0)
    G = SuperFunction({Monomial(1): 1}, trunc=3)
    # z^3 * (z^0..z^3) is known up to z^4 only when the second factor is exact up to z^3
    assert (F * G).trunc == 3


def test_inverse_series():
    V = SuperFunction({Monomial(1): 1 + y, Monomial(0, 1, 1): 1}, reduced=True)
    one = V * V.inverse()
    assert one.simplify().equals(SuperFunction.constant(1))
    W = SuperFunction({Monomial(0): 2 + x, Monomial(1): x, Monomial(1, 0, 1): y}, reduced=True)
    assert (W.inverse() * W).simplify().equals(SuperFunction.constant(1))


def test_negative_power():
    V = SuperFunction({Monomial(1): 1}, reduced=True)
    assert (V ** -2).equals(SuperFunction({Monomial(0): 1 / y}, reduced=True))


def test_non_invertible_body():
    with pytest.raises(ZeroDivisionError):
        SuperFunction({Monomial(0, 1, 1): 1}, reduced=True).inverse()


def test_eight_component_round_trip():
    form = EightComponentForm(phi00=x, A00=x * y, A11=y**2, psi01=1)
    F = from_xy_form(form)
    assert to_xy_form(F) == form
    assert F.slot(1, 1, 1) == x * y


def test_eight_component_form_of_series():
    # w = v^2, so a z^3 xi eta component lands in the A00 slot with a factor w
    F = SuperFunction({Monomial(3, 1, 1): x, Monomial(2): 1})
    form = to_xy_form(F)
    assert form.A00 == x * y
    assert form.phi00 == y


def test_eight_component_form_rejects_laurent():
    with pytest.raises(LaurentNotSupported):
        to_xy_form(SuperFunction({Monomial(-1): 1}, laurent_depth=1))


def test_generic_function_and_degree_metadata():
    F = generic_function(2)
    assert len(F.terms) == 12
    assert F.check_degrees() == []
    assert str(component_atom(-2, 1, 1)) == "gm211"


def test_degree_check_flags_wrong_atoms():
    bad = function_atom("bad_odd", (x,), slots=("u",), degree=(1, 0))
    F = SuperFunction({Monomial(0): bad}, declared_degree=Degree(0, 0))
    assert F.check_degrees()


def test_coordinates():
    assert coordinate("z").equals(SuperFunction({Monomial(1): 1}, reduced=True))
    with pytest.raises(ValueError):
        coordinate("w")
    assert (coordinate("xi") * coordinate("xi")).simplify().terms == {}
    assert (coordinate("z") * coordinate("z")).equals(SuperFunction.constant(y))


def test_homogeneous_degree():
    F = SuperFunction({Monomial(1, 1, 0): x, Monomial(0, 0, 1): 1})
    assert F.degree() == Degree(1, 0)
    assert SuperFunction({Monomial(1): 1, Monomial(0): 1}).degree() is None
    assert sp.sympify(F.coefficient(1, 1, 0)) == x
