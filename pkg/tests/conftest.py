import random

import pytest
import sympy as sp
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from z22calc.graded import ALL_DEGREES, Monomial
from z22calc.scalar import x, y
from z22calc.superfunction import SuperFunction

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile("default")

# every monomial z^k xi^a eta^b with 0 <= k <= 3, grouped by degree
SERIES_MONOMIALS = [Monomial(k, a, b) for k in range(4) for a in (0, 1) for b in (0, 1)]


def _poly(draw, variables):
    coeffs = draw(st.lists(st.integers(-3, 3), min_size=3, max_size=3))
    v = variables
    basis = [sp.Integer(1), v[0], v[-1] ** 2 if len(v) > 1 else v[0] ** 2]
    return sp.Add(*[c * b for c, b in zip(coeffs, basis)])


@st.composite
def homogeneous(draw, degree=None, reduced=False):
    """A nonzero-or-zero homogeneous superfunction of the given (or a drawn) degree."""
    if degree is None:
        degree = draw(st.sampled_from(ALL_DEGREES))
    monos = [m for m in SERIES_MONOMIALS if m.degree == degree]
    if reduced:
        monos = [m for m in monos if m.z in (0, 1)]
    chosen = draw(st.lists(st.sampled_from(monos), min_size=1, max_size=3, unique=True))
    variables = (x, y) if reduced else (x,)
    terms = {m: _poly(draw, variables) for m in chosen}
    return SuperFunction(terms, reduced=reduced)


@pytest.fixture
def rng():
    return random.Random(1234)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
