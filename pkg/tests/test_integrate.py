import math

import numpy as np
import pytest
from scipy import integrate as si

from z22calc.berezinian import ber_closed
from z22calc.integrate import (
    DecompositionMismatch,
    SupportViolation,
    TruncationTooShallow,
    berezinian_section,
    compose_slot,
    constraints_closed_form,
    constraints_def1,
    decompose_total_derivative,
    def1_coefficient,
    integrate_def1,
    integrate_def2,
    integrate_def3,
    preimage_box,
)
from z22calc.io import load_function
from z22calc.numeric import SUPPORT_BOX, BumpFunction, quad2d, sample_slots, sample_transform
from z22calc.scalar import PoleAtOrigin, diff, equal, evaluate, function_atoms, restrict_y0, substitute, x, y
from z22calc.superfunction import LaurentNotSupported, SuperFunction, component_atom, generic_function
from z22calc.transform import CoordinateChange

DATA = __import__("pathlib").Path(__file__).parent / "data"
G = CoordinateChange.generic()


def g(k, a, b, order=0):
    """Component atom composed with fU(x, y), optionally differentiated in its argument."""
    atom = component_atom(k, a, b)
    for _ in range(order):
        atom = diff(atom, x)
    return substitute(atom, {x: G.fU})


def _orders(expr):
    return {sum(a.index) for a in function_atoms(expr) if a.base.startswith("g")}


# -- first definition ---------------------------------------------------------


@pytest.mark.parametrize("ell", range(4))
def test_constraints_match_closed_form(ell):
    assert constraints_def1(ell) == constraints_closed_form(ell)


def test_constraints_explicit_cases():
    assert constraints_def1(0).vanishing == {"g100"}
    assert constraints_def1(1).vanishing == {"g000", "g200"}
    assert constraints_def1(2).vanishing == {"g100", "g300", "g011"}


def test_ell0_integrand():
    fux = diff(G.fU, x)
    ff = G.fZeta * G.fTheta
    exact = def1_coefficient(generic_function(1), G, 0)
    corrected = restrict_y0(fux * G.fV * g(0, 1, 1) + fux * G.fV * G.gV / ff * g(1, 0, 0))
    assert equal(exact, corrected)
    printed = restrict_y0(fux * G.fV * g(0, 1, 1) + fux * G.fV / ff * g(1, 0, 0))
    assert equal(printed - exact, restrict_y0(fux * G.fV * (1 - G.gV) / ff * g(1, 0, 0)))


def test_ell1_integrand_matches_display_exactly():
    fux = diff(G.fU, x)
    ff = G.fZeta * G.fTheta
    soul = ber_closed(G).soul
    printed = restrict_y0(
        fux * G.fV**2 * g(1, 1, 1)
        + soul * g(0, 0, 0)
        + fux * G.fV / ff * (2 * G.fV * G.gV * g(2, 0, 0) + G.gU * g(0, 0, 0, 1))
    )
    assert equal(def1_coefficient(generic_function(2), G, 1), printed)


def test_ell2_integrand():
    fux = diff(G.fU, x)
    ff = G.fZeta * G.fTheta
    soul = ber_closed(G).soul
    head = (
        fux * G.fV**3 * g(2, 1, 1)
        + soul * G.fV * g(1, 0, 0)
        + fux * G.fV**2 / ff * (3 * G.fV * G.gV * g(3, 0, 0) + G.gU * g(1, 0, 0, 1))
    )
    exact = def1_coefficient(generic_function(3), G, 2)
    corrected = restrict_y0(head + diff(G.jb() * (G.gV / G.det_d() * g(1, 0, 0) + g(0, 1, 1)), y))
    assert equal(exact, corrected)
    printed = restrict_y0(head + diff(fux * G.fV * (G.gV / ff * g(1, 0, 0) + g(0, 1, 1)), y))
    assert not equal(exact, printed)


@pytest.mark.parametrize("ell", range(3))
def test_obstructions_are_first_order_for_small_ell(ell):
    res = integrate_def1(generic_function(ell + 1), G, ell)
    assert all(o.order <= 1 for o in res.obstructions)


def test_derivative_order_grows_past_ell_two():
    coeff = def1_coefficient(generic_function(4), G, 3)
    assert max(_orders(coeff)) == math.ceil(3 / 2)


@pytest.mark.parametrize("ell", range(4))
def test_identity_has_canonical_term_only(ell):
    res = integrate_def1(generic_function(ell + 1), CoordinateChange.identity(), ell)
    assert res.obstructions == []
    assert equal(res.canonical_term, component_atom(ell, 1, 1))


def test_canonical_term_generic():
    res = integrate_def1(generic_function(2), G, 1)
    assert equal(res.canonical_term, restrict_y0(diff(G.fU, x) * G.fV**2 * g(1, 1, 1)))
    assert res.obstruction_keys() == {"g000", "g200"}


def test_degree_warning_for_even_ell():
    assert integrate_def1(generic_function(1), G, 0).warnings
    assert not integrate_def1(generic_function(2), G, 1).warnings


def test_truncation_too_shallow():
    with pytest.raises(TruncationTooShallow):
        integrate_def1(generic_function(0), G, 1)


def test_def1_rejects_laurent_functions():
    with pytest.raises(LaurentNotSupported):
        integrate_def1(generic_function(2, laurent_depth=1), G, 1)


def test_def1_is_linear():
    T = sample_transform(0.2, 3)
    a, b = generic_function(2, prefix="a"), generic_function(2, prefix="b")
    lhs = def1_coefficient(a * 2 + b * 3, T, 1)
    assert equal(lhs, 2 * def1_coefficient(a, T, 1) + 3 * def1_coefficient(b, T, 1))


def test_def1_numeric_value_with_identity():
    F = load_function(DATA / "bump_series.json", trunc=2)
    res = integrate_def1(F.function, CoordinateChange.identity(), 0, F.env)
    b = F.env["g011"]
    expected = si.quad(lambda s: float(b(np.array([s]))[0]), b.center - b.half_width, b.center + b.half_width)[0]
    assert res.numeric_value == pytest.approx(expected, rel=1e-9)


# -- second definition --------------------------------------------------------


def test_def2_exceptional_case():
    res = integrate_def2(generic_function(0, laurent_depth=1), G, 1)
    assert res.obstructions == []
    assert equal(res.canonical_term, restrict_y0(diff(G.fU, x) * g(-1, 1, 1)))


def test_def2_beyond_depth_is_zero():
    res = integrate_def2(generic_function(0, laurent_depth=1), G, 2)
    assert res.canonical_term == 0 and res.numeric_value == 0.0 and res.obstructions == []


def test_def2_identity():
    res = integrate_def2(generic_function(0, laurent_depth=3), CoordinateChange.identity(), 2)
    assert res.obstructions == []
    assert equal(res.canonical_term, component_atom(-2, 1, 1))


def test_def2_pole_at_origin():
    T = CoordinateChange.from_mapping({"fV": y})
    with pytest.raises(PoleAtOrigin):
        integrate_def2(generic_function(0, laurent_depth=1), T, 1)


def test_def2_example_obstructions():
    T = CoordinateChange.from_mapping({"fV": 1 + y, "gV": 1})
    res = integrate_def2(generic_function(0, laurent_depth=3), T, 2)
    assert res.obstruction_keys() == {"gm100", "gm300"}
    assert equal(res.multiplier("gm300"), 3)
    assert equal(res.multiplier("gm100"), -1)


# -- third definition ---------------------------------------------------------


def _bump_integral(b: BumpFunction) -> float:
    return si.quad(lambda s: float(b(np.array([s]))[0]), b.center - b.half_width, b.center + b.half_width, epsabs=0, epsrel=1e-13)[0]


def test_def3_new_coordinates_value():
    F = load_function(DATA / "bump_slots.json")
    res = integrate_def3(F.function, F.env)
    p = F.env["A00"]
    expected = 0.5 * p.scale * _bump_integral(p.first) * _bump_integral(p.second)
    assert res.numeric_value == pytest.approx(expected, rel=1e-9)


def test_def3_identity_transform():
    F = load_function(DATA / "bump_slots.json")
    plain = integrate_def3(F.function, F.env).numeric_value
    res = integrate_def3(F.function, F.env, CoordinateChange.identity())
    assert res.numeric_value == pytest.approx(plain, rel=1e-9)
    assert equal(res.total_derivative, 0)


def test_def3_support_violation():
    F = load_function(
        {
            "schema": "z22calc.function/1",
            "form": "slots",
            "slots": {"A00": {"bump2": {"u": {"center": 1.8, "halfWidth": 0.5}, "w": {"center": 1, "halfWidth": 0.5}}}},
        }
    )
    with pytest.raises(SupportViolation):
        integrate_def3(F.function, F.env)


def test_preimage_box_contains_support():
    T = sample_transform(0.1, 5)
    x0, x1, y0, y1 = preimage_box(T, SUPPORT_BOX)
    assert x0 < SUPPORT_BOX[0] + 0.3 and x1 > SUPPORT_BOX[1] - 0.3 and y0 >= 0


def test_total_derivative_against_direct_section():
    # independent route: build the section of explicit slots and subtract the canonical part
    T = sample_transform(0.15, 7)
    slots = {"phi00": x**2 + y, "A00": 1 + x * y}
    F = SuperFunction({(0, 0, 0): slots["phi00"], (1, 1, 1): slots["A00"]}, reduced=True)
    _, Q = berezinian_section(F, T)
    rest = Q - T.jb() * T.fV * compose_slot(slots["A00"], T)
    jx, jy = decompose_total_derivative(T, rest, slots["phi00"])
    assert equal(rest, diff(jx, x) + diff(jy, y))


def test_decomposition_generic():
    from z22calc.integrate import def3_skeleton

    sk = def3_skeleton()
    jx, jy = sk.currents
    assert equal(sk.obstruction, diff(jx, x) + diff(jy, y))


def test_decomposition_mismatch():
    T = sample_transform(0.15, 8)
    with pytest.raises(DecompositionMismatch):
        decompose_total_derivative(T, x * y, x**2 + y)


@pytest.mark.parametrize("seed", range(2))
def test_total_derivative_integrates_to_zero(seed):
    T = sample_transform(0.1, 40 + seed)
    S = sample_slots(500 + seed)
    res = integrate_def3(S.function, S.env, T, domain=SUPPORT_BOX)
    box = preimage_box(T, SUPPORT_BOX)
    div = lambda X, Y: evaluate(res.total_derivative, S.env, X, Y)
    value = quad2d(div, box, 32, 16)
    scale = quad2d(lambda X, Y: np.abs(div(X, Y)), box, 32, 16)
    assert scale > 0
    assert abs(value) <= 1e-8 * scale
