"""Scalar expressions in the base variables ``x`` and ``y`` over function atoms.

Scalar expressions are plain sympy expressions.  Unknown functions are
represented by :class:`FunctionAtom` symbols that remember their base name,
derivative multi-index and argument expressions, so that differentiation,
composition and restriction to ``y = 0`` follow the chain rule while
normal forms stay cheap polynomial arithmetic over independent symbols.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from itertools import product as iproduct
from typing import Callable, Iterable, Mapping

import numpy as np
import sympy as sp

x, y = sp.symbols("x y")
BASE_VARIABLES = (x, y)

ScalarExpr = sp.Expr


class ZeroDenominator(ZeroDivisionError):
    pass


class PoleAtOrigin(ValueError):
    pass


class UnboundAtom(KeyError):
    pass


class DivisionNearZero(ArithmeticError):
    pass


class NonFiniteValue(ArithmeticError):
    pass


@dataclass(frozen=True)
class AtomSpec:
    base: str
    index: tuple[int, ...]
    args: tuple[sp.Expr, ...]
    slots: tuple[str, ...]

    @property
    def order(self) -> int:
        return sum(self.index)


_SPECS: dict[str, AtomSpec] = {}
_BASE_SLOTS: dict[str, tuple[str, ...]] = {}
_BASE_DEGREE: dict[str, tuple[int, int]] = {}


class FunctionAtom(sp.Symbol):
    """A symbol standing for ``base^(index)(*args)``.

    Instances are interned by name, and the name encodes the base, the
    derivative index and the arguments, so equal atoms are the same symbol.
    """

    @property
    def spec(self) -> AtomSpec:
        return _SPECS[self.name]

    @property
    def base(self) -> str:
        return self.spec.base

    @property
    def index(self) -> tuple[int, ...]:
        return self.spec.index

    @property
    def atom_args(self) -> tuple[sp.Expr, ...]:
        return self.spec.args


def _render(base: str, index: tuple[int, ...], args: tuple[sp.Expr, ...], slots) -> str:
    name = base
    if any(index):
        name += "_" + "".join(s * n for s, n in zip(slots, index))
    if args != BASE_VARIABLES[: len(args)]:
        name += "(" + ", ".join(sp.sstr(a) for a in args) + ")"
    return name


def function_atom(
    base: str,
    args: Iterable | None = None,
    *,
    slots: tuple[str, ...] | None = None,
    index: tuple[int, ...] | None = None,
    degree: tuple[int, int] | None = None,
) -> FunctionAtom:
    """Create (or fetch) the atom ``base^(index)(*args)``.

    ``slots`` names the arguments for display ("x", "y" for transform
    functions, "u", "w" for component functions).  The slot names of a base
    are fixed by its first use.
    """
    if slots is None:
        slots = _BASE_SLOTS.get(base, ("x", "y"))
    slots = tuple(slots)
    known = _BASE_SLOTS.setdefault(base, slots)
    if known != slots:
        raise ValueError(f"atom {base!r} already declared with slots {known}")
    if degree is not None:
        _BASE_DEGREE.setdefault(base, tuple(degree))
    if args is None:
        args = BASE_VARIABLES[: len(slots)]
    args = tuple(sp.sympify(a) for a in args)
    if len(args) != len(slots):
        raise ValueError(f"atom {base!r} takes {len(slots)} arguments")
    index = tuple(index) if index is not None else (0,) * len(slots)
    name = _render(base, index, args, slots)
    spec = AtomSpec(base, index, args, slots)
    old = _SPECS.setdefault(name, spec)
    if old != spec:
        raise ValueError(f"atom name clash for {name!r}")
    return FunctionAtom(name)


def atom_degree(base: str) -> tuple[int, int] | None:
    return _BASE_DEGREE.get(base)


def _with(spec: AtomSpec, *, index=None, args=None) -> FunctionAtom:
    return function_atom(
        spec.base,
        spec.args if args is None else args,
        slots=spec.slots,
        index=spec.index if index is None else index,
    )


def function_atoms(e: sp.Expr) -> set[FunctionAtom]:
    """Top-level atoms of ``e`` (atoms nested inside arguments are not included)."""
    return {s for s in sp.sympify(e).free_symbols if isinstance(s, FunctionAtom)}


def all_atoms(e: sp.Expr) -> set[FunctionAtom]:
    """Every atom of ``e``, including those nested inside atom arguments."""
    seen: set[FunctionAtom] = set()
    stack = list(function_atoms(e))
    while stack:
        a = stack.pop()
        if a in seen:
            continue
        seen.add(a)
        for arg in a.atom_args:
            stack.extend(function_atoms(arg))
    return seen


@functools.lru_cache(maxsize=None)
def _atom_derivative(a: FunctionAtom, v: sp.Symbol) -> sp.Expr:
    spec = a.spec
    terms = []
    for i, arg in enumerate(spec.args):
        darg = diff(arg, v)
        if darg != 0:
            idx = list(spec.index)
            idx[i] += 1
            terms.append(_with(spec, index=tuple(idx)) * darg)
    return sp.Add(*terms)


def diff(e: sp.Expr, v: sp.Symbol) -> sp.Expr:
    """Total partial derivative in ``v`` (``x`` or ``y``) with the chain rule through atoms."""
    e = sp.sympify(e)
    out = [e.diff(v)] if v in e.free_symbols else []
    for a in sorted(function_atoms(e), key=str):
        da = _atom_derivative(a, v)
        if da != 0:
            out.append(e.diff(a) * da)
    return sp.Add(*out)


def substitute(e: sp.Expr, mapping: Mapping[sp.Symbol, sp.Expr]) -> sp.Expr:
    """Replace ``x``/``y`` by expressions everywhere, including inside atom arguments."""
    mapping = {k: sp.sympify(v) for k, v in mapping.items()}
    memo: dict = {}

    def sub(expr: sp.Expr) -> sp.Expr:
        expr = sp.sympify(expr)
        rep = dict(mapping)
        for a in function_atoms(expr):
            rep[a] = sub_atom(a)
        return expr.xreplace(rep)

    def sub_atom(a: FunctionAtom) -> sp.Expr:
        if a not in memo:
            spec = a.spec
            memo[a] = _with(spec, args=tuple(sub(arg) for arg in spec.args))
        return memo[a]

    return sub(e)


def restrict_y0(e: sp.Expr) -> sp.Expr:
    """``e`` evaluated on the line ``y = 0``."""
    return substitute(e, {y: sp.Integer(0)})


@functools.lru_cache(maxsize=None)
def depends_on_y(e: sp.Expr) -> bool:
    if y in e.free_symbols:
        return True
    return any(any(depends_on_y(arg) for arg in a.atom_args) for a in function_atoms(e))


# -- normal forms ----------------------------------------------------------


def _check_finite(e: sp.Expr) -> sp.Expr:
    if e.has(sp.zoo, sp.nan, sp.oo, -sp.oo):
        raise ZeroDenominator(f"expression has a zero denominator: {e}")
    return e


def normalize(e: sp.Expr) -> sp.Expr:
    """Single reduced fraction of expanded polynomials over the atom alphabet."""
    e = _check_finite(sp.sympify(e))
    num, den = sp.fraction(sp.together(e))
    if sp.expand(den) == 0:
        raise ZeroDenominator(f"identically zero denominator in {e}")
    return _check_finite(sp.cancel(e))


def _has_denominator(e: sp.Expr) -> bool:
    return any(p.is_Pow and p.exp.is_negative for p in sp.preorder_traversal(e))


def _field_is_zero(e: sp.Expr) -> bool | None:
    """Zero test in the rational function field over ``x``, ``y`` and the atoms.

    Sparse field arithmetic handles nested fractions far faster than
    ``together``/``expand`` on the expression tree.  Returns ``None`` when the
    expression is not rational in those generators.
    """
    gens = sorted(e.free_symbols, key=str) + sorted(function_atoms(e), key=sp.default_sort_key)
    if not gens:
        return sp.nsimplify(e) == 0
    try:
        K = _rational_field(tuple(gens))
        return K.from_expr(e) == 0
    except (ValueError, sp.PolynomialError, ZeroDivisionError) as exc:
        if isinstance(exc, ZeroDivisionError):
            raise ZeroDenominator(f"identically zero denominator in {e}") from exc
        return None


@functools.lru_cache(maxsize=256)
def _rational_field(gens: tuple):
    return sp.polys.fields.FracField(gens, sp.QQ)


def is_zero(e: sp.Expr) -> bool:
    e = _check_finite(sp.sympify(e))
    if e == 0:
        return True
    fast = _field_is_zero(e)
    if fast is not None:
        return fast
    if not _has_denominator(e):
        return sp.expand(e) == 0
    num, den = sp.fraction(sp.together(e))
    if sp.expand(den) == 0:
        raise ZeroDenominator(f"identically zero denominator in {e}")
    return sp.expand(num) == 0


def equal(e1: sp.Expr, e2: sp.Expr) -> bool:
    """Exact equality as rational functions of ``x``, ``y`` and independent atoms."""
    return is_zero(sp.sympify(e1) - sp.sympify(e2))


def to_text(e: sp.Expr) -> str:
    """Canonical text of the normal form."""
    return sp.sstr(normalize(e))


# -- series in y -------------------------------------------------------------


class YSeries:
    """Truncated Laurent series ``sum(coeffs[i] * y**(val + i))`` known below ``val + len``."""

    __slots__ = ("val", "coeffs")

    def __init__(self, val: int, coeffs: list):
        self.val = val
        self.coeffs = coeffs

    @property
    def prec(self) -> int:
        return self.val + len(self.coeffs)

    def __getitem__(self, power: int):
        if power >= self.prec:
            raise IndexError(f"y^{power} beyond series precision {self.prec}")
        i = power - self.val
        return self.coeffs[i] if i >= 0 else sp.Integer(0)

    def truncated(self, prec: int) -> YSeries:
        return YSeries(self.val, self.coeffs[: max(0, prec - self.val)])

    def __repr__(self) -> str:
        return f"YSeries(val={self.val}, coeffs={self.coeffs})"


def _tidy(c: sp.Expr) -> sp.Expr:
    return sp.expand(c)


def _constant(c: sp.Expr, prec: int) -> YSeries:
    return YSeries(0, [c] + [sp.Integer(0)] * (prec - 1)) if prec > 0 else YSeries(0, [])


def _add(series: list[YSeries], prec: int) -> YSeries:
    val = min(s.val for s in series)
    prec = min([prec] + [s.prec for s in series])
    coeffs = []
    for p in range(val, prec):
        coeffs.append(_tidy(sp.Add(*[s[p] for s in series if s.val <= p])))
    return YSeries(val, coeffs)


def _mul(a: YSeries, b: YSeries, prec: int) -> YSeries:
    val = a.val + b.val
    prec = min(prec, a.prec + b.val, b.prec + a.val)
    coeffs = []
    for p in range(val, prec):
        terms = []
        for i in range(a.val, p - b.val + 1):
            ca, cb = a[i], b[p - i]
            if ca != 0 and cb != 0:
                terms.append(ca * cb)
        coeffs.append(_tidy(sp.Add(*terms)))
    return YSeries(val, coeffs)


def _inverse(s: YSeries, expected_val: int, prec: int) -> YSeries:
    v = expected_val
    lead = s[v] if v < s.prec else sp.Integer(0)
    if v >= s.prec or is_zero(lead):
        raise PoleAtOrigin("denominator vanishes identically at y = 0")
    inv_lead = 1 / lead
    n_terms = min(prec + v, s.prec - v) - 0
    out: list = []
    for n in range(max(0, n_terms)):
        if n == 0:
            out.append(_tidy(inv_lead))
            continue
        acc = sp.Add(*[s[v + k] * out[n - k] for k in range(1, n + 1) if s[v + k] != 0])
        out.append(_tidy(-inv_lead * acc))
    return YSeries(-v, out)


@functools.lru_cache(maxsize=None)
def _ord(e: sp.Expr) -> int:
    """Structural lower bound on the y-adic valuation of ``e``."""
    if e == y:
        return 1
    if e.is_Add:
        return min(_ord(t) for t in e.args)
    if e.is_Mul:
        return sum(_ord(f) for f in e.args)
    if e.is_Pow:
        b, n = e.args
        if n.is_Integer:
            return int(n) * _ord(b)
    return 0


def _series(e: sp.Expr, prec: int, memo: dict) -> YSeries:
    key = (e, prec)
    if key in memo:
        return memo[key]
    low = _ord(e)
    if prec <= low:
        # nothing is requested below the structural valuation
        out = YSeries(low, [])
    elif not depends_on_y(e):
        out = _constant(e, prec)
    elif e == y:
        out = YSeries(1, [sp.Integer(1)] + [sp.Integer(0)] * (prec - 2)) if prec > 1 else YSeries(1, [])
    elif e.is_Add:
        out = _add([_series(t, prec, memo) for t in e.args], prec)
    elif e.is_Mul:
        ords = [_ord(f) for f in e.args]
        total = sum(ords)
        out = None
        remaining = total
        for f, o in zip(e.args, ords):
            s = _series(f, prec - (total - o), memo)
            remaining -= o
            out = s if out is None else _mul(out, s, prec - remaining)
    elif e.is_Pow:
        b, n = e.args
        if not n.is_Integer:
            raise NotImplementedError(f"non-integer power in y-series: {e}")
        n = int(n)
        if b == y:
            out = YSeries(n, [sp.Integer(1)] + [sp.Integer(0)] * (prec - n - 1)) if prec > n else YSeries(n, [])
        elif n > 0:
            ob = _ord(b)
            base = _series(b, prec - (n - 1) * ob, memo)
            out = base
            for _ in range(n - 1):
                out = _mul(out, base, prec)
        else:
            m = -n
            ob = _ord(b)
            inv_prec = prec + (m - 1) * ob
            base = _series(b, inv_prec + 2 * ob, memo)
            inv = _inverse(base, ob, inv_prec)
            out = inv
            for _ in range(m - 1):
                out = _mul(out, inv, prec)
    elif isinstance(e, FunctionAtom):
        out = _atom_series(e, prec, memo)
    else:
        raise NotImplementedError(f"unsupported node in y-series: {e.func}")
    out = out.truncated(prec)
    memo[key] = out
    return out


def _atom_series(a: FunctionAtom, prec: int, memo: dict) -> YSeries:
    spec = a.spec
    arg_series = [_series(arg, prec, memo) for arg in spec.args]
    for s in arg_series:
        if s.val < 0 and any(c != 0 for c in s.coeffs[: -s.val]):
            raise PoleAtOrigin(f"atom argument has a pole at y = 0: {a}")
    heads = [s[0] if s.prec > 0 else sp.Integer(0) for s in arg_series]
    deltas = []
    for s in arg_series:
        tail = [s[p] if p >= 1 else sp.Integer(0) for p in range(0, s.prec)]
        if len(tail) > 0:
            tail[0] = sp.Integer(0)
        deltas.append(YSeries(0, tail))
    live = [i for i, d in enumerate(deltas) if any(c != 0 for c in d.coeffs)]
    terms = []
    ranges = [range(prec) if i in live else range(1) for i in range(len(deltas))]
    for m in iproduct(*ranges):
        if sum(m) >= max(prec, 1) and sum(m) > 0:
            continue
        idx = tuple(i + j for i, j in zip(spec.index, m))
        head = _with(spec, index=idx, args=tuple(heads))
        term = _constant(head / math.prod(math.factorial(k) for k in m), prec)
        for i, k in enumerate(m):
            for _ in range(k):
                term = _mul(term, deltas[i], prec)
        terms.append(term)
    return _add(terms, prec)


def series_y(e: sp.Expr, order: int) -> list[sp.Expr]:
    """Taylor coefficients of ``e`` in ``y`` at 0, for ``y**0 .. y**order``.

    Coefficients are functions of ``x`` alone: atoms are restricted to
    ``y = 0``.  Coefficient 0 is ``e`` evaluated at ``y = 0``.
    """
    s = _series(sp.sympify(e), order + 1, {})
    if s.val < 0:
        for p in range(s.val, min(0, s.prec)):
            if not is_zero(s[p]):
                raise PoleAtOrigin(f"expression has a pole at y = 0: y^{p} term")
    return [s[p] if p >= s.val else sp.Integer(0) for p in range(order + 1)]


def laurent_coefficient(e: sp.Expr, power: int) -> sp.Expr:
    """Coefficient of ``y**power`` in the Laurent expansion of ``e`` about ``y = 0``."""
    s = _series(sp.sympify(e), power + 1, {})
    return s[power] if power >= s.val else sp.Integer(0)


# -- numeric binding ---------------------------------------------------------


@functools.lru_cache(maxsize=4096)
def _lambdified(symbols: tuple, e: sp.Expr) -> Callable:
    return sp.lambdify(symbols, e, modules="numpy")


def evaluate(e: sp.Expr, env, xs, ys) -> np.ndarray:
    """Evaluate ``e`` on arrays ``xs``, ``ys`` with atoms bound through ``env``.

    ``env`` maps atom base names to concrete functions exposing
    ``derivative(index)`` and ``__call__(*args)`` (see :mod:`z22calc.numeric`).
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    shape = np.broadcast_shapes(xs.shape, ys.shape)
    cache: dict = {}

    def ev(expr: sp.Expr) -> np.ndarray:
        expr = sp.sympify(expr)
        if expr.is_Number:
            return np.full(shape, float(expr))
        syms = tuple(sorted(expr.free_symbols, key=str))
        vals = [value(s) for s in syms]
        out = _lambdified(syms, expr)(*vals)
        return np.broadcast_to(np.asarray(out, dtype=float), shape)

    def value(s: sp.Symbol) -> np.ndarray:
        if s == x:
            return np.broadcast_to(xs, shape)
        if s == y:
            return np.broadcast_to(ys, shape)
        if not isinstance(s, FunctionAtom):
            raise UnboundAtom(str(s))
        if s not in cache:
            spec = s.spec
            try:
                fn = env[spec.base]
            except KeyError:
                raise UnboundAtom(spec.base) from None
            args = [ev(arg) for arg in spec.args]
            cache[s] = np.broadcast_to(np.asarray(fn.derivative(spec.index)(*args), dtype=float), shape)
        return cache[s]

    return ev(e)


def bind_and_eval(e: sp.Expr, env, point: tuple[float, float], eps: float = 1e-12) -> float:
    """Numeric value of ``e`` at ``point``; refuses to divide by anything below ``eps``."""
    e = sp.sympify(e)
    px, py = (np.array(float(point[0])), np.array(float(point[1])))
    for node in sp.preorder_traversal(e):
        if node.is_Pow and node.args[1].is_negative:
            d = float(evaluate(node.args[0], env, px, py))
            if abs(d) < eps:
                raise DivisionNearZero(f"|{node.args[0]}| = {abs(d):.3g} < {eps:g} at {point}")
    val = float(evaluate(e, env, px, py))
    if not math.isfinite(val):
        raise NonFiniteValue(f"non-finite value of {e} at {point}")
    return val
