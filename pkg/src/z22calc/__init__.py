"""Calculus on the minimal Z2xZ2-graded superspace ``(x, z, xi, eta)``.

Graded monomials, scalar expressions with function atoms, superfunctions,
coordinate changes and their Berezinian, three integration definitions and
numeric tools to check their coordinate independence.
"""

from .berezinian import Berezinian, SingularD, ber_closed, ber_direct
from .graded import Degree, Monomial, monomial_mul, sign
from .integrate import (
    ConstraintSet,
    IntegralResult,
    Obstruction,
    constraints_closed_form,
    constraints_def1,
    decompose_total_derivative,
    integrate_def1,
    integrate_def2,
    integrate_def3,
)
from .numeric import (
    BindingEnv,
    BumpFunction,
    quad2d,
    sample_function,
    sample_slots,
    sample_transform,
)
from .scalar import diff, equal, function_atom, is_zero, normalize, series_y, x, y
from .suite import SuiteReport, invariance_suite
from .superfunction import SuperFunction, from_xy_form, generic_function, to_xy_form
from .transform import CoordinateChange, compose, jacobian, pullback, validate

__all__ = [
    "Berezinian",
    "BindingEnv",
    "BumpFunction",
    "ConstraintSet",
    "CoordinateChange",
    "Degree",
    "IntegralResult",
    "Monomial",
    "Obstruction",
    "SingularD",
    "SuiteReport",
    "SuperFunction",
    "ber_closed",
    "ber_direct",
    "compose",
    "constraints_closed_form",
    "constraints_def1",
    "decompose_total_derivative",
    "diff",
    "equal",
    "from_xy_form",
    "function_atom",
    "generic_function",
    "integrate_def1",
    "integrate_def2",
    "integrate_def3",
    "invariance_suite",
    "is_zero",
    "jacobian",
    "monomial_mul",
    "normalize",
    "pullback",
    "quad2d",
    "sample_function",
    "sample_slots",
    "sample_transform",
    "series_y",
    "sign",
    "to_xy_form",
    "validate",
    "x",
    "y",
]
