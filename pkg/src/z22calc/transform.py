"""General coordinate changes of the minimal superspace, their Jacobians and pullbacks.

A change of coordinates is stored in the resummed two-variable form::

    u     = fU(x, y) + gU(x, y) z xi eta
    v     = fV(x, y) z + gV(x, y) xi eta
    zeta  = fZeta(x, y) xi + gZeta(x, y) z eta
    theta = fTheta(x, y) eta + gTheta(x, y) z xi

with ``y = z**2``.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Mapping, Sequence

import numpy as np
import sympy as sp

from .graded import Monomial
from .scalar import (
    PoleAtOrigin,
    diff,
    evaluate,
    function_atom,
    function_atoms,
    is_zero,
    substitute,
    x,
    y,
)
from .superfunction import SuperFunction

NAMES = ("fU", "gU", "fV", "gV", "fZeta", "gZeta", "fTheta", "gTheta")
ATOM_NAMES = dict(zip(NAMES, ("fu", "gu", "fv", "gv", "fzeta", "gzeta", "ftheta", "gtheta")))

# where each function sits inside the new coordinates
LAYOUT = {
    "fU": ("u", Monomial(0, 0, 0)),
    "gU": ("u", Monomial(1, 1, 1)),
    "fV": ("v", Monomial(1, 0, 0)),
    "gV": ("v", Monomial(0, 1, 1)),
    "fZeta": ("zeta", Monomial(0, 1, 0)),
    "gZeta": ("zeta", Monomial(1, 0, 1)),
    "fTheta": ("theta", Monomial(0, 0, 1)),
    "gTheta": ("theta", Monomial(1, 1, 0)),
}
NEW_COORDINATES = ("u", "v", "zeta", "theta")
OLD_COORDINATES = ("x", "z", "xi", "eta")


class NotInCanonicalForm(ValueError):
    pass


@dataclass(frozen=True)
class CoordinateChange:
    fU: sp.Expr
    gU: sp.Expr
    fV: sp.Expr
    gV: sp.Expr
    fZeta: sp.Expr
    gZeta: sp.Expr
    fTheta: sp.Expr
    gTheta: sp.Expr

    def __post_init__(self) -> None:
        for f in fields(self):
            object.__setattr__(self, f.name, sp.sympify(getattr(self, f.name)))

    @classmethod
    def identity(cls) -> CoordinateChange:
        return cls(x, 0, 1, 0, 1, 0, 1, 0)

    @classmethod
    def generic(cls) -> CoordinateChange:
        """Every function an independent atom of ``(x, y)``."""
        return cls(*(function_atom(ATOM_NAMES[n], slots=("x", "y"), degree=(0, 0)) for n in NAMES))

    @classmethod
    def from_mapping(cls, entries: Mapping[str, object]) -> CoordinateChange:
        """Missing entries default to the identity transform."""
        unknown = set(entries) - set(NAMES)
        if unknown:
            raise ValueError(f"unknown transform entries: {sorted(unknown)}")
        base = cls.identity().as_dict()
        base.update({k: sp.sympify(v) for k, v in entries.items()})
        return cls(**base)

    @classmethod
    def from_series(cls, series: Mapping[str, Sequence], y_order: int | None = None) -> CoordinateChange:
        """Resum ``f = sum_r f_r(x) y**r`` from per-function lists of ``f_r``."""
        entries = {}
        for name, coeffs in series.items():
            coeffs = list(coeffs)[: None if y_order is None else y_order + 1]
            entries[name] = sp.Add(*[sp.sympify(c) * y**r for r, c in enumerate(coeffs)])
        return cls.from_mapping(entries)

    def as_dict(self) -> dict[str, sp.Expr]:
        return {n: getattr(self, n) for n in NAMES}

    def map(self, fn) -> CoordinateChange:
        return CoordinateChange(**{n: fn(e) for n, e in self.as_dict().items()})

    # -- derived scalars ---------------------------------------------------

    def jb(self) -> sp.Expr:
        """Jacobian of the bosonic part, ``fU_x fV + 2y (fU_x fV_y - fU_y fV_x)``."""
        fux, fuy = diff(self.fU, x), diff(self.fU, y)
        fvx, fvy = diff(self.fV, x), diff(self.fV, y)
        return fux * self.fV + 2 * y * (fux * fvy - fuy * fvx)

    def det_d(self) -> sp.Expr:
        return self.fZeta * self.fTheta - y * self.gZeta * self.gTheta

    # -- superfunctions ----------------------------------------------------

    def coordinates(self) -> dict[str, SuperFunction]:
        terms: dict[str, dict] = {c: {} for c in NEW_COORDINATES}
        for name, (coord, mono) in LAYOUT.items():
            terms[coord][mono] = getattr(self, name)
        return {c: SuperFunction(t, reduced=True) for c, t in terms.items()}


def instantiate(expr: sp.Expr, T: CoordinateChange, extra: Mapping[str, sp.Expr] | None = None) -> sp.Expr:
    """Replace generic transform atoms (and any ``extra`` two-variable atoms) by explicit functions.

    Derivative indices become derivatives of the explicit function and atom
    arguments are substituted, so ``fu_x(x, 0)`` turns into ``d_x fU`` at ``y = 0``.
    """
    funcs = {ATOM_NAMES[n]: e for n, e in T.as_dict().items()}
    funcs.update(extra or {})
    memo: dict = {}

    def inst(e: sp.Expr) -> sp.Expr:
        e = sp.sympify(e)
        rep = {}
        for a in function_atoms(e):
            if a not in memo:
                spec = a.spec
                args = tuple(inst(arg) for arg in spec.args)
                if spec.base in funcs:
                    d = funcs[spec.base]
                    for v, n in zip((x, y), spec.index):
                        for _ in range(n):
                            d = diff(d, v)
                    memo[a] = substitute(d, dict(zip((x, y), args)))
                else:
                    memo[a] = function_atom(spec.base, args, slots=spec.slots, index=spec.index)
            rep[a] = memo[a]
        return e.xreplace(rep)

    return inst(expr)


@dataclass(frozen=True)
class GradedJacobian:
    """``entries[i][j] = d_{X_i}(new_j)`` with rows (x, z, xi, eta) and columns (u, v, zeta, theta)."""

    entries: tuple[tuple[SuperFunction, ...], ...]

    def block(self, rows: range, cols: range) -> list[list[SuperFunction]]:
        return [[self.entries[i][j] for j in cols] for i in rows]

    @property
    def A(self):
        return self.block(range(0, 2), range(0, 2))

    @property
    def B(self):
        return self.block(range(0, 2), range(2, 4))

    @property
    def C(self):
        return self.block(range(2, 4), range(0, 2))

    @property
    def D(self):
        return self.block(range(2, 4), range(2, 4))

    def __getitem__(self, ij: tuple[int, int]) -> SuperFunction:
        i, j = ij
        return self.entries[i][j]

    def is_identity(self) -> bool:
        one = SuperFunction.constant(1)
        zero = SuperFunction(reduced=True)
        return all(
            self.entries[i][j].equals(one if i == j else zero) for i in range(4) for j in range(4)
        )


def jacobian(T: CoordinateChange) -> GradedJacobian:
    new = T.coordinates()
    return GradedJacobian(
        tuple(tuple(new[c].deriv(r) for c in NEW_COORDINATES) for r in OLD_COORDINATES)
    )


class _Pullback:
    """Caches the images of ``u``, ``w`` and powers of ``v`` for one transform."""

    def __init__(self, T: CoordinateChange):
        self.T = T
        coords = T.coordinates()
        self.V, self.Z, self.Th = coords["v"], coords["zeta"], coords["theta"]
        W = self.V * self.V
        self.w0 = W.slot(0, 0, 0)
        self.w1 = W.slot(1, 1, 1)
        self._vpow = {0: SuperFunction.constant(1), 1: self.V}
        self._vinv: SuperFunction | None = None

    def vpow(self, k: int) -> SuperFunction:
        if k not in self._vpow:
            if k > 0:
                self._vpow[k] = self.vpow(k - 1) * self.V
            else:
                if self._vinv is None:
                    if is_zero(substitute(self.T.fV, {y: 0})):
                        raise PoleAtOrigin("negative powers of v need fV(x, 0) != 0")
                    self._vinv = self.V.inverse()
                self._vpow[k] = self.vpow(k + 1) * self._vinv
        return self._vpow[k]

    def scalar(self, c: sp.Expr) -> SuperFunction:
        """``c(u, w)`` for a coefficient written in ``(x, y)`` standing for ``(u, w)``."""
        at = {x: self.T.fU, y: self.w0}
        body = substitute(c, at)
        soul = substitute(diff(c, x), at) * self.T.gU + substitute(diff(c, y), at) * self.w1
        return SuperFunction({Monomial(0): body, Monomial(1, 1, 1): soul}, reduced=True)

    def __call__(self, F: SuperFunction) -> SuperFunction:
        out = SuperFunction(reduced=True)
        for m, c in F.terms.items():
            term = self.scalar(c) * self.vpow(m.z)
            if m.xi:
                term = term * self.Z
            if m.eta:
                term = term * self.Th
            out = out + term
        return out


def pullback(T: CoordinateChange, F: SuperFunction) -> SuperFunction:
    """Express ``F(u, v, zeta, theta)`` in the old coordinates.

    Coefficients of ``F`` are read as functions of ``(u, w)`` through the
    symbols ``(x, y)``; series-mode input has no ``y``.  Nilpotent shifts are
    expanded exactly, so the result is exact and in reduced form.
    """
    return _Pullback(T)(F)


def compose(T1: CoordinateChange, T2: CoordinateChange) -> CoordinateChange:
    """The change ``old -> T1 -> T2 -> new`` as a single transform."""
    pb = _Pullback(T1)
    images = {c: pb(F) for c, F in T2.coordinates().items()}
    out = {}
    for name, (coord, mono) in LAYOUT.items():
        out[name] = images[coord].slot(mono.z, mono.xi, mono.eta)
    for coord, F in images.items():
        allowed = {mono for c, mono in LAYOUT.values() if c == coord}
        extra = [m for m in F.terms if m not in allowed and not is_zero(F.terms[m])]
        if extra:
            raise NotInCanonicalForm(f"{coord} picked up monomials {extra}")
    return CoordinateChange(**out)


@dataclass(frozen=True)
class ValidityReport:
    min_abs_jb: float
    min_abs_det_d: float
    min_abs_fv0: float
    eps: float

    @property
    def valid(self) -> bool:
        return min(self.min_abs_jb, self.min_abs_det_d, self.min_abs_fv0) >= self.eps


def validate(
    T: CoordinateChange,
    domain: tuple[float, float, float, float] = (-2.0, 2.0, 0.0, 2.0),
    eps: float = 1e-6,
    env: Mapping | None = None,
    points: int = 41,
) -> ValidityReport:
    """Grid minima of ``|J^B|``, ``|det D|`` and ``|fV(x, 0)|`` on ``[x0, x1] x [y0, y1]``."""
    x0, x1, y0, y1 = domain
    X, Y = np.meshgrid(np.linspace(x0, x1, points), np.linspace(y0, y1, points), indexing="ij")
    env = env or {}
    jb = np.min(np.abs(evaluate(T.jb(), env, X, Y)))
    dd = np.min(np.abs(evaluate(T.det_d(), env, X, Y)))
    xs = X[:, 0]
    fv0 = np.min(np.abs(evaluate(T.fV, env, xs, np.zeros_like(xs))))
    return ValidityReport(float(jb), float(dd), float(fv0), eps)
