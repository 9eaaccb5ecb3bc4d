"""Three candidate integrals on the minimal superspace and their behaviour under coordinate changes.

All three start from the Berezinian section in old coordinates,
``d_xi d_eta [Gamma(J) * F(u, v, zeta, theta)]``, which in reduced form is
``P(x, y) + Q(x, y) z``:

* the first picks the ``z**l`` coefficient (so ``y**r`` of ``P`` or ``Q``),
* the second picks ``z**-l`` from a Laurent function,
* the third integrates ``Q`` over ``(x, y)``, which is the image of the
  ``A00`` slot integrated over ``(u, w)`` with ``w = v**2``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import sympy as sp

from .berezinian import ber_closed
from .graded import Monomial
from .scalar import (
    FunctionAtom,
    all_atoms,
    diff,
    equal,
    evaluate,
    function_atoms,
    is_zero,
    laurent_coefficient,
    restrict_y0,
    series_y,
    substitute,
    to_text,
    x,
    y,
)
from .superfunction import (
    LaurentNotSupported,
    SLOTS,
    SuperFunction,
    component_degree,
    generic_function,
    slot_atoms,
)
from .numeric import (
    DEFAULT_DOMAIN,
    OLD_DOMAIN,
    BindingEnv,
    Concrete,
    ZeroFunction,
    boundary_max,
    quad1d,
    quad2d,
    tensor_grid,
    weighted_sum,
)
from .transform import CoordinateChange, instantiate, pullback


class TruncationTooShallow(ValueError):
    pass


class SupportViolation(ValueError):
    pass


class DecompositionMismatch(AssertionError):
    pass


@dataclass(frozen=True)
class Obstruction:
    component: str
    order: int
    multiplier: sp.Expr

    def as_dict(self) -> dict:
        return {"component": self.component, "order": self.order, "multiplier": to_text(self.multiplier)}


@dataclass
class IntegralResult:
    canonical_term: sp.Expr
    obstructions: list[Obstruction] = field(default_factory=list)
    numeric_value: float | None = None
    warnings: list[str] = field(default_factory=list)
    divergence: tuple[sp.Expr, sp.Expr] | None = None
    total_derivative: sp.Expr | None = None

    @property
    def well_defined(self) -> bool:
        return all(is_zero(o.multiplier) for o in self.obstructions)

    def obstruction_keys(self) -> set[str]:
        return {o.component for o in self.obstructions}

    def multiplier(self, component: str, order: int = 0) -> sp.Expr:
        for o in self.obstructions:
            if o.component == component and o.order == order:
                return o.multiplier
        return sp.Integer(0)


@dataclass(frozen=True)
class ConstraintSet:
    vanishing: frozenset[str]

    def slots(self) -> list[tuple[int, int, int]]:
        return sorted(component_index(c) for c in self.vanishing)

    def __contains__(self, name: str) -> bool:
        return name in self.vanishing


def component_name(k: int, a: int, b: int, prefix: str = "g") -> str:
    return f"{prefix}{k}{a}{b}" if k >= 0 else f"{prefix}m{-k}{a}{b}"


def component_index(name: str, prefix: str = "g") -> tuple[int, int, int]:
    body = name[len(prefix):]
    sign = 1
    if body.startswith("m"):
        sign, body = -1, body[1:]
    return sign * int(body[:-2]), int(body[-2]), int(body[-1])


def _sort_key(name: str) -> tuple:
    try:
        k, a, b = component_index(name)
        return (0, a, b, k)
    except ValueError:
        return (1, name)


def berezinian_section(F: SuperFunction, T: CoordinateChange) -> tuple[sp.Expr, sp.Expr]:
    """``(P, Q)`` with ``d_xi d_eta [Gamma * pullback(F)] = P + Q z``."""
    gamma = ber_closed(T).as_superfunction()
    S = (gamma * pullback(T, F)).deriv("eta").deriv("xi")
    return S.slot(0, 0, 0), S.slot(1, 0, 0)


def _split_components(expr: sp.Expr, bases: set[str]) -> dict[tuple[str, int], sp.Expr]:
    """Coefficients of the (linear) component atoms in ``expr``, keyed by ``(base, order)``."""
    expr = sp.expand(expr)
    atoms = sorted((a for a in function_atoms(expr) if a.base in bases), key=str)
    out: dict[tuple[str, int], sp.Expr] = {}
    rest = expr
    for a in atoms:
        c = expr.diff(a)
        if c.has(*atoms):
            raise ValueError(f"expression is not linear in the components: {a}")
        key = (a.base, sum(a.index))
        out[key] = out.get(key, 0) + c
        rest = rest - c * a
    if not is_zero(rest):
        raise ValueError(f"component-free remainder in integrand: {rest}")
    return out


def _classify(
    coeff: sp.Expr, F: SuperFunction, canonical_base: str | None, canonical_multiplier: sp.Expr
) -> tuple[sp.Expr, list[Obstruction]]:
    bases = {a.base for c in F.terms.values() for a in all_atoms(c)}
    parts = _split_components(coeff, bases)
    canonical = sp.Integer(0)
    obstructions = []
    for (base, order), mult in sorted(parts.items(), key=lambda kv: (_sort_key(kv[0][0]), kv[0][1])):
        if base == canonical_base and order == 0:
            atom = next(a for a in function_atoms(coeff) if a.base == base and sum(a.index) == 0)
            canonical = canonical_multiplier * atom
            mult = mult - canonical_multiplier
        if not is_zero(mult):
            obstructions.append(Obstruction(base, order, sp.together(mult)))
    return canonical, obstructions


def _degree_warning(ell: int, k: int) -> list[str]:
    deg = component_degree(Monomial(k, 1, 1))
    if deg.a1 or deg.a2:
        return [f"degree mismatch: the integral has degree (0,0) but its component has degree {deg}"]
    return []


def _window_check(F: SuperFunction, needed: int) -> None:
    if F.trunc is not None and F.trunc < needed:
        raise TruncationTooShallow(f"truncation K={F.trunc} below the required {needed}")


def def1_coefficient(F: SuperFunction, T: CoordinateChange, ell: int) -> sp.Expr:
    """``z**ell`` coefficient of the section, a function of ``x``."""
    F = SuperFunction({m: c for m, c in F.terms.items() if m.z <= ell + 1}, trunc=F.trunc)
    P, Q = berezinian_section(F, T)
    r, odd = divmod(ell, 2)
    return series_y(Q if odd else P, r)[r]


def def2_coefficient(F: SuperFunction, T: CoordinateChange, ell: int) -> sp.Expr:
    """``z**-ell`` coefficient of the section of a Laurent function."""
    F = SuperFunction(
        {m: c for m, c in F.terms.items() if m.z <= 1 - ell}, laurent_depth=F.laurent_depth, trunc=F.trunc
    )
    P, Q = berezinian_section(F, T)
    if ell % 2:
        coeff = laurent_coefficient(Q, -(ell + 1) // 2)
    else:
        coeff = laurent_coefficient(P, -ell // 2)
    return restrict_y0(coeff)


def _line_integral(coeff: sp.Expr, env: Mapping | None) -> float | None:
    if env is None:
        return None
    return quad1d(lambda s: evaluate(coeff, env, s, np.zeros_like(s)), *OLD_DOMAIN[:2])


def integrate_def1(F: SuperFunction, T: CoordinateChange, ell: int, env: Mapping | None = None) -> IntegralResult:
    """Coefficient of ``z**ell`` of the section, split into canonical and obstruction parts.

    With ``env`` binding the components (and any transform atoms) the
    coefficient is also integrated over ``x``.
    """
    if ell < 0:
        raise ValueError("ell must be non-negative")
    if F.reduced or any(m.z < 0 for m in F.terms):
        raise LaurentNotSupported("the first definition needs a Taylor series-mode function")
    _window_check(F, ell + 1)
    coeff = def1_coefficient(F, T, ell)
    canonical, obs = _classify(coeff, F, _canonical_base(F, ell), restrict_y0(T.jb() * T.fV**ell))
    return IntegralResult(canonical, obs, _line_integral(coeff, env), _degree_warning(ell, ell))


def integrate_def2(F: SuperFunction, T: CoordinateChange, ell: int, env: Mapping | None = None) -> IntegralResult:
    """Coefficient of ``z**-ell`` of the section for a Laurent function of depth ``M``."""
    if ell < 0:
        raise ValueError("ell must be non-negative")
    if F.reduced:
        raise ValueError("the second definition needs a series-mode function")
    M = F.laurent_depth
    if ell > M:
        return IntegralResult(sp.Integer(0), [], numeric_value=0.0, warnings=["ell exceeds the Laurent depth"])
    _window_check(F, 1 - ell)
    coeff = def2_coefficient(F, T, ell)
    canonical, obs = _classify(coeff, F, _canonical_base(F, -ell), restrict_y0(T.jb() * T.fV ** (-ell)))
    return IntegralResult(canonical, obs, _line_integral(coeff, env), _degree_warning(ell, -ell))


def _canonical_base(F: SuperFunction, k: int) -> str | None:
    c = F.terms.get(Monomial(k, 1, 1))
    if c is None:
        return None
    atoms = [a for a in function_atoms(c)]
    return atoms[0].base if len(atoms) == 1 else None


@functools.lru_cache(maxsize=None)
def constraints_def1(ell: int) -> ConstraintSet:
    """Components that must vanish for the first definition at level ``ell``.

    Obtained by running :func:`integrate_def1` on a fully generic function and
    a generic transform and collecting the obstruction keys.
    """
    res = integrate_def1(generic_function(ell + 1), CoordinateChange.generic(), ell)
    return ConstraintSet(frozenset(res.obstruction_keys()))


def constraints_closed_form(ell: int) -> ConstraintSet:
    """The closed-form vanishing list for level ``ell`` (used as an assertion target)."""
    m, odd = divmod(ell, 2)
    if not odd:
        names = [component_name(2 * k + 1, 0, 0) for k in range(m + 1)]
        names += [component_name(2 * k, 1, 1) for k in range(m)]
    else:
        names = [component_name(2 * k, 0, 0) for k in range(m + 2)]
        names += [component_name(2 * k + 1, 1, 1) for k in range(m)]
    return ConstraintSet(frozenset(names))


# -- the third definition ------------------------------------------------------


def compose_slot(c: sp.Expr, T: CoordinateChange) -> sp.Expr:
    """``c(fU, y fV**2)``: a ``(u, w)`` slot seen from the old coordinates."""
    return substitute(c, {x: T.fU, y: y * T.fV**2})


def decompose_total_derivative(
    T: CoordinateChange, obstruction: sp.Expr, phi00: sp.Expr | None = None
) -> tuple[sp.Expr, sp.Expr]:
    """Currents ``(jx, jy)`` with ``obstruction = d_x jx + d_y jy``, checked exactly."""
    if phi00 is None:
        phi00 = slot_atoms().phi00
    phi = compose_slot(phi00, T)
    dd = T.det_d()
    fux, fuy = diff(T.fU, x), diff(T.fU, y)
    fvx, fvy = diff(T.fV, x), diff(T.fV, y)
    jx = ((T.fV + 2 * y * fvy) * T.gU - 2 * fuy * T.gV) * phi / dd
    jy = 2 * (fux * T.gV - y * fvx * T.gU) * phi / dd
    if not equal(obstruction, diff(jx, x) + diff(jy, y)):
        raise DecompositionMismatch("obstruction is not the divergence of the expected currents")
    return jx, jy


def linear_parts(expr: sp.Expr, bases: set[str]) -> dict[FunctionAtom, sp.Expr]:
    """``{atom: coefficient}`` for an expression linear in the atoms with the given bases."""
    atoms = sorted((a for a in function_atoms(expr) if a.base in bases), key=str)
    return {a: expr.diff(a) for a in atoms}


SKELETON_PREFIX = "S"


@dataclass(frozen=True)
class Def3Skeleton:
    """Section of a generic eight-slot function under a generic transform.

    ``P`` and ``Q`` are linear in the slot atoms; ``parts`` holds their
    coefficients, which depend on the transform alone.
    """

    P: sp.Expr
    Q: sp.Expr
    canonical: sp.Expr
    obstruction: sp.Expr
    currents: tuple[sp.Expr, sp.Expr]
    parts: dict


@functools.lru_cache(maxsize=None)
def def3_skeleton() -> Def3Skeleton:
    T = CoordinateChange.generic()
    slots = slot_atoms(SKELETON_PREFIX)
    F = SuperFunction({m: getattr(slots, n) for n, m in SLOTS.items()}, reduced=True)
    P, Q = berezinian_section(F, T)
    canonical = T.jb() * T.fV * compose_slot(slots.A00, T)
    obstruction = Q - canonical
    currents = decompose_total_derivative(T, obstruction, slots.phi00)
    bases = {getattr(slots, n).base for n in SLOTS}
    parts = {"P": linear_parts(P, bases), "Q": linear_parts(Q, bases)}
    return Def3Skeleton(P, Q, canonical, obstruction, currents, parts)


class BoundExpr(Concrete):
    """An expression in ``(x, y)`` whose atoms are resolved through ``env``."""

    arity = 2

    def __init__(self, expr: sp.Expr, env: Mapping):
        self.expr = sp.sympify(expr)
        self.env = env

    def _deriv(self, index):
        e = self.expr
        for v, n in zip((x, y), index):
            for _ in range(n):
                e = diff(e, v)
        return lambda u, w, e=e: evaluate(e, self.env, u, w)


def slot_bindings(F: SuperFunction, env: Mapping) -> BindingEnv:
    """Bind the skeleton slot atoms to the slots of ``F``."""
    R = F.reduce()
    out = BindingEnv()
    skeleton_slots = slot_atoms(SKELETON_PREFIX)
    for name, m in SLOTS.items():
        c = R.slot(m.z, m.xi, m.eta)
        base = getattr(skeleton_slots, name).base
        if c == 0:
            out[base] = ZeroFunction(2)
        elif (
            isinstance(c, FunctionAtom)
            and not any(c.index)
            and c.atom_args == (x, y)
            and c.base in env
        ):
            out[base] = env[c.base]
        else:
            out[base] = BoundExpr(c, env)
    return out


def preimage_box(
    T: CoordinateChange, box: Sequence[float], search: Sequence[float] = OLD_DOMAIN, points: int = 401
) -> tuple[float, float, float, float]:
    """Rectangle in ``(x, y)`` containing every point that ``(fU, y fV^2)`` sends into ``box``.

    Found by sampling ``search``; padded by two grid steps and clipped to it.
    """
    x0, x1, y0, y1 = (float(d) for d in search)
    X, Y = np.meshgrid(np.linspace(x0, x1, points), np.linspace(y0, y1, points), indexing="ij")
    env = BindingEnv.for_transform(T) if _has_transform_atoms(T) else {}
    U = np.broadcast_to(evaluate(T.fU, env, X, Y), X.shape)
    W = np.broadcast_to(evaluate(y * T.fV**2, env, X, Y), X.shape)
    inside = (U >= box[0]) & (U <= box[1]) & (W >= box[2]) & (W <= box[3])
    if not inside.any():
        raise SupportViolation("the box has no preimage inside the search region")
    hx, hy = 2 * (x1 - x0) / (points - 1), 2 * (y1 - y0) / (points - 1)
    xs, ys = X[inside], Y[inside]
    out = (
        max(x0, xs.min() - hx),
        min(x1, xs.max() + hx),
        max(y0, ys.min() - hy),
        min(y1, ys.max() + hy),
    )
    edge = inside[0].any() or inside[-1].any() or inside[:, -1].any() or (y0 > 0 and inside[:, 0].any())
    if edge:
        raise SupportViolation("the preimage reaches the edge of the search region")
    return out


def _has_transform_atoms(T: CoordinateChange) -> bool:
    return any(function_atoms(e) for e in T.as_dict().values())


class Def3Evaluator:
    """Old-coordinate integrals for one transform on a fixed quadrature grid.

    The grid covers ``old_domain``, by default the preimage of ``domain``.
    The transform-only coefficients of ``Q`` and ``P`` are evaluated once;
    each function then costs a handful of slot evaluations.
    """

    def __init__(
        self,
        T: CoordinateChange,
        old_domain: Sequence[float] | None = None,
        order: int = 64,
        panels: int = 8,
        *,
        domain: Sequence[float] = DEFAULT_DOMAIN,
    ):
        self.T = T
        if old_domain is None:
            old_domain = preimage_box(T, domain)
        self.old_domain = tuple(float(d) for d in old_domain)
        self.grid = tensor_grid(self.old_domain, order, panels)
        self.env_T = BindingEnv.for_transform(T)
        self._coeffs: dict[str, list] = {}

    def _coefficients(self, which: str) -> list:
        if which not in self._coeffs:
            s, t, _, _ = self.grid
            self._coeffs[which] = [
                (atom, evaluate(c, self.env_T, s, t)) for atom, c in def3_skeleton().parts[which].items()
            ]
        return self._coeffs[which]

    def values(self, which: str, slots: Mapping) -> np.ndarray:
        s, t, _, _ = self.grid
        env = dict(self.env_T)
        env.update(slots)
        total = np.zeros((s.size, t.size))
        for atom, coeff in self._coefficients(which):
            if isinstance(slots.get(atom.base), ZeroFunction):
                continue
            total += coeff * evaluate(atom, env, s, t)
        return total

    def integral(self, slots: Mapping, keep_a11: bool = False) -> float:
        _, t, wu, wv = self.grid
        vals = self.values("Q", slots)
        if keep_a11:
            vals = vals + self.values("P", slots) * _inv_sqrt(t)
        return 0.5 * weighted_sum(vals, wu, wv)


def _support_check(F: SuperFunction, env, domain, rel: float = 1e-12) -> None:
    R = F.reduce()
    for m, c in R.terms.items():
        f = lambda u, w, c=c: evaluate(c, env, u, w)
        edge = boundary_max(f, domain)
        if edge == 0:
            continue
        xs = np.linspace(domain[0], domain[1], 101)
        ys = np.linspace(domain[2], domain[3], 101)
        inner = float(np.max(np.abs(f(xs[:, None], ys[None, :]))))
        if edge > rel * max(inner, 1e-300):
            raise SupportViolation(f"slot {m} is not negligible on the domain boundary ({edge:.3g})")


def _inv_sqrt(w):
    w = np.asarray(w, dtype=float)
    return np.where(w > 0, 1 / np.sqrt(np.where(w > 0, w, 1)), 0.0)


def integrate_def3(
    F: SuperFunction,
    env: Mapping,
    T: CoordinateChange | None = None,
    *,
    domain: Sequence[float] = DEFAULT_DOMAIN,
    old_domain: Sequence[float] | None = None,
    order: int = 64,
    panels: int = 8,
    keep_a11: bool = False,
    evaluator: Def3Evaluator | None = None,
    symbolic: bool = True,
) -> IntegralResult:
    """``1/2 * int_D A00(u, w) du dw``, or its old-coordinate image when ``T`` is given.

    Without ``T`` the ``A00`` slot is integrated over ``domain`` in ``(u, w)``.
    With ``T`` the ``z`` slot ``Q`` of the old-coordinate section is integrated
    over ``old_domain`` in ``(x, y)``, by default the preimage of ``domain``.  The result then carries the canonical
    term ``J^B fV A00(fU, y fV^2)``, the remaining ``phi00`` obstruction and its
    divergence currents; it integrates to zero, so it is not listed among
    the obstructions.  ``keep_a11`` adds ``A11 w**-1/2`` (resp. ``P y**-1/2``).
    ``symbolic=False`` returns the numbers and the canonical term only.
    """
    _support_check(F, env, domain)
    R = F.reduce()
    if T is None:
        a00 = R.slot(1, 1, 1)
        value = quad2d(lambda u, w: evaluate(a00, env, u, w), domain, order, panels)
        if keep_a11:
            a11 = R.slot(0, 1, 1)
            value += quad2d(lambda u, w: evaluate(a11, env, u, w) * _inv_sqrt(w), domain, order, panels)
        return IntegralResult(a00, [], numeric_value=0.5 * value)

    ev = evaluator if evaluator is not None else Def3Evaluator(T, old_domain, order, panels, domain=domain)
    value = ev.integral(slot_bindings(F, env), keep_a11)
    canonical = T.jb() * T.fV * compose_slot(R.slot(1, 1, 1), T)
    if not symbolic:
        return IntegralResult(canonical, [], numeric_value=value)
    sk = def3_skeleton()
    bind = _skeleton_instance(F, T)
    divergence = (bind(sk.currents[0]), bind(sk.currents[1]))
    return IntegralResult(
        canonical, [], numeric_value=value, divergence=divergence, total_derivative=bind(sk.obstruction)
    )


def _skeleton_instance(F: SuperFunction, T: CoordinateChange):
    """Map a skeleton expression to the given transform and slot expressions."""
    R = F.reduce()
    skeleton_slots = slot_atoms(SKELETON_PREFIX)
    slot_exprs = {getattr(skeleton_slots, n).base: R.slot(m.z, m.xi, m.eta) for n, m in SLOTS.items()}

    def bind(e: sp.Expr) -> sp.Expr:
        return instantiate(e, T, slot_exprs)

    return bind
