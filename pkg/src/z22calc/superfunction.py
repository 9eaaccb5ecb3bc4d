"""Functions on the minimal Z2 x Z2 superspace.

A :class:`SuperFunction` is a finite sum ``sum c * z**k * xi**a * eta**b`` with
commuting scalar coefficients.  It lives in one of two modes:

* *series* mode: coefficients depend on ``x`` only and ``z`` powers are explicit
  inside a window ``[-M, K]``.  ``K=None`` means the sum is an exact polynomial.
* *reduced* mode: ``z**2`` has been folded into the even variable ``y`` so every
  monomial has ``z`` power 0 or 1 and coefficients depend on ``(x, y)``.  This
  form is exact (no truncation) and is what transforms produce.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as iproduct
from typing import Iterable, Mapping

import sympy as sp

from .graded import COORDINATE_DEGREES, ONE, Degree, Monomial, monomial_mul
from .scalar import (
    atom_degree,
    all_atoms,
    diff,
    equal,
    function_atom,
    is_zero,
    laurent_coefficient,
    normalize,
    x,
    y,
)

DEFAULT_TRUNCATION = 8


class OutOfWindow(IndexError):
    pass


class LaurentNotSupported(ValueError):
    pass


class DegreeMismatch(ValueError):
    pass


def _fold(k: int) -> tuple[int, int]:
    """``z**k = y**r * z**s`` with ``s`` in {0, 1}."""
    return k // 2, k % 2


class SuperFunction:
    __slots__ = ("terms", "laurent_depth", "trunc", "reduced", "declared_degree")

    def __init__(
        self,
        terms: Mapping[Monomial, object] | None = None,
        *,
        laurent_depth: int = 0,
        trunc: int | None = None,
        reduced: bool = False,
        declared_degree: Degree | None = None,
    ):
        clean: dict[Monomial, sp.Expr] = {}
        for m, c in (terms or {}).items():
            if not isinstance(m, Monomial):
                m = Monomial(*m)
            c = sp.sympify(c)
            if c == 0:
                continue
            if reduced:
                if m.z not in (0, 1):
                    raise ValueError(f"reduced functions only hold z^0 and z^1, got {m}")
            else:
                if m.z < -laurent_depth or (trunc is not None and m.z > trunc):
                    continue
            clean[m] = clean.get(m, sp.Integer(0)) + c
        self.terms = {m: c for m, c in sorted(clean.items()) if c != 0}
        self.laurent_depth = laurent_depth
        self.trunc = trunc
        self.reduced = reduced
        self.declared_degree = declared_degree

    # -- constructors ------------------------------------------------------

    @classmethod
    def constant(cls, c, *, reduced: bool = True) -> SuperFunction:
        return cls({ONE: c}, reduced=reduced)

    @classmethod
    def generator(cls, name: str, *, reduced: bool = True) -> SuperFunction:
        m = {"x": None, "z": Monomial(1), "xi": Monomial(0, 1), "eta": Monomial(0, 0, 1)}[name]
        if m is None:
            return cls({ONE: x}, reduced=reduced)
        return cls({m: 1}, reduced=reduced)

    def _like(self, terms, **kw) -> SuperFunction:
        opts = dict(
            laurent_depth=self.laurent_depth,
            trunc=self.trunc,
            reduced=self.reduced,
            declared_degree=self.declared_degree,
        )
        opts.update(kw)
        return SuperFunction(terms, **opts)

    # -- basic protocol ----------------------------------------------------

    def __repr__(self) -> str:
        mode = "reduced" if self.reduced else f"window=[-{self.laurent_depth}, {self.trunc}]"
        return f"SuperFunction({self}, {mode})"

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"({c})*{m}" if m != ONE else f"({c})" for m, c in self.terms.items())

    def __iter__(self):
        return iter(self.terms.items())

    def __bool__(self) -> bool:
        return bool(self.terms)

    @property
    def window(self) -> tuple[int, int | None]:
        return self.laurent_depth, self.trunc

    # -- mode conversion ---------------------------------------------------

    def reduce(self) -> SuperFunction:
        """Fold ``z**2`` into ``y``.  Truncation information is dropped."""
        if self.reduced:
            return self
        out: dict[Monomial, sp.Expr] = {}
        for m, c in self.terms.items():
            r, s = _fold(m.z)
            key = Monomial(s, m.xi, m.eta)
            out[key] = out.get(key, 0) + c * y**r
        return SuperFunction(out, reduced=True, laurent_depth=self.laurent_depth, declared_degree=self.declared_degree)

    def _align(self, other: SuperFunction) -> tuple[SuperFunction, SuperFunction]:
        if self.reduced == other.reduced:
            return self, other
        return self.reduce(), other.reduce()

    # -- ring operations ---------------------------------------------------

    def __add__(self, other) -> SuperFunction:
        if not isinstance(other, SuperFunction):
            other = SuperFunction.constant(other, reduced=self.reduced)
        a, b = self._align(other)
        terms = dict(a.terms)
        for m, c in b.terms.items():
            terms[m] = terms.get(m, 0) + c
        return SuperFunction(
            terms,
            laurent_depth=max(a.laurent_depth, b.laurent_depth),
            trunc=_min_trunc(a.trunc, b.trunc),
            reduced=a.reduced,
            declared_degree=a.declared_degree if a.declared_degree == b.declared_degree else None,
        )

    __radd__ = __add__

    def __neg__(self) -> SuperFunction:
        return self._like({m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> SuperFunction:
        return self + (-other)

    def __rsub__(self, other) -> SuperFunction:
        return (-self) + other

    def scale(self, c) -> SuperFunction:
        c = sp.sympify(c)
        return self._like({m: c * v for m, v in self.terms.items()})

    def __mul__(self, other) -> SuperFunction:
        if not isinstance(other, SuperFunction):
            return self.scale(other)
        a, b = self._align(other)
        out: dict[Monomial, list] = {}
        for (m1, c1), (m2, c2) in iproduct(a.terms.items(), b.terms.items()):
            res = monomial_mul(m1, m2)
            if res is None:
                continue
            s, m = res
            c = s * c1 * c2
            if a.reduced and m.z not in (0, 1):
                r, k = _fold(m.z)
                c = c * y**r
                m = Monomial(k, m.xi, m.eta)
            out.setdefault(m, []).append(c)
        terms = {m: sp.Add(*cs) for m, cs in out.items()}
        if a.reduced:
            return SuperFunction(terms, reduced=True, laurent_depth=a.laurent_depth + b.laurent_depth)
        M1, K1 = a.window
        M2, K2 = b.window
        if K1 is None and K2 is None:
            K = None
        elif K1 is None:
            K = K2 + _min_z(a) if a.terms else None
        elif K2 is None:
            K = K1 + _min_z(b) if b.terms else None
        else:
            K = min(K1 - M2, K2 - M1)
        return SuperFunction(terms, laurent_depth=M1 + M2, trunc=K)

    def __rmul__(self, other) -> SuperFunction:
        return self.scale(other)

    def __pow__(self, n: int) -> SuperFunction:
        if n < 0:
            return self.inverse() ** (-n)
        out = SuperFunction.constant(1, reduced=self.reduced)
        if not self.reduced:
            out = SuperFunction({ONE: 1}, trunc=None)
        for _ in range(n):
            out = out * self
        return out

    def inverse(self) -> SuperFunction:
        """Multiplicative inverse, computed in reduced form.

        With body ``B = a + b z`` (no fermions) and nilpotent rest ``N``,
        ``B**-1 = (a - b z) / (a**2 - y b**2)`` and
        ``F**-1 = sum_j (-B**-1 N)**j B**-1``, which stops after two steps.
        """
        F = self.reduce()
        a = F.terms.get(Monomial(0), sp.Integer(0))
        b = F.terms.get(Monomial(1), sp.Integer(0))
        den = a**2 - y * b**2
        if is_zero(den):
            raise ZeroDivisionError("body of the superfunction is not invertible")
        binv = SuperFunction({Monomial(0): a / den, Monomial(1): -b / den}, reduced=True)
        nil = SuperFunction({m: c for m, c in F.terms.items() if m.fermions}, reduced=True)
        step = -(binv * nil)
        out = binv
        power = binv
        for _ in range(2):
            power = step * power
            out = out + power
        return out

    # -- derivatives ---------------------------------------------------------

    def deriv(self, c: str) -> SuperFunction:
        """Left graded partial derivative in ``x``, ``z``, ``xi`` or ``eta``."""
        out: dict[Monomial, sp.Expr] = {}

        def put(m: Monomial, v: sp.Expr) -> None:
            out[m] = out.get(m, 0) + v

        for m, v in self.terms.items():
            if c == "x":
                put(m, diff(v, x))
            elif c == "z":
                if self.reduced:
                    # d/dz (v(x, z^2) z^k) = k v z^(k-1) + 2 v_y z^(k+1)
                    vy = 2 * diff(v, y)
                    if m.z == 0:
                        put(Monomial(1, m.xi, m.eta), vy)
                    else:
                        put(Monomial(0, m.xi, m.eta), v + y * vy)
                elif m.z:
                    put(Monomial(m.z - 1, m.xi, m.eta), m.z * v)
            elif c == "xi":
                if m.xi:
                    put(Monomial(m.z, 0, m.eta), (-1) ** (m.z % 2) * v)
            elif c == "eta":
                if m.eta:
                    put(Monomial(m.z, m.xi, 0), (-1) ** (m.z % 2) * v)
            else:
                raise ValueError(f"unknown coordinate {c!r}")
        if c == "z" and not self.reduced:
            return self._like(out, laurent_depth=self.laurent_depth + 1, trunc=None if self.trunc is None else self.trunc - 1)
        return self._like(out)

    # -- access --------------------------------------------------------------

    def coefficient(self, k: int, a: int, b: int) -> sp.Expr:
        """Coefficient of ``z**k xi**a eta**b``.

        In reduced mode this reads the ``y``-Laurent expansion of the slot, so
        the result depends on ``x`` alone.
        """
        if self.reduced:
            r, s = _fold(k)
            return laurent_coefficient(self.terms.get(Monomial(s, a, b), sp.Integer(0)), r)
        if k < -self.laurent_depth or (self.trunc is not None and k > self.trunc):
            raise OutOfWindow(f"z^{k} outside window [-{self.laurent_depth}, {self.trunc}]")
        return self.terms.get(Monomial(k, a, b), sp.Integer(0))

    def slot(self, k: int, a: int, b: int) -> sp.Expr:
        return self.terms.get(Monomial(k, a, b), sp.Integer(0))

    def map(self, fn) -> SuperFunction:
        return self._like({m: fn(c) for m, c in self.terms.items()})

    def simplify(self) -> SuperFunction:
        out = {}
        for m, c in self.terms.items():
            c = normalize(c)
            if c != 0:
                out[m] = c
        return self._like(out)

    def equals(self, other: SuperFunction) -> bool:
        a, b = self._align(other)
        for m in set(a.terms) | set(b.terms):
            if not equal(a.terms.get(m, 0), b.terms.get(m, 0)):
                return False
        return True

    def degree(self) -> Degree | None:
        """Common degree of the monomials (coefficients count as degree (0,0)); ``None`` if mixed."""
        degs = {m.degree for m in self.terms}
        if len(degs) > 1:
            return None
        return degs.pop() if degs else Degree(0, 0)

    def check_degrees(self) -> list[str]:
        """Compare registered atom degrees against ``declared + monomial`` for each term."""
        if self.declared_degree is None:
            return []
        problems = []
        for m, c in self.terms.items():
            want = self.declared_degree + m.degree
            for a in sorted(all_atoms(c), key=str):
                have = atom_degree(a.base)
                if have is not None and Degree(*have) != want:
                    problems.append(f"{a.base} on {m}: degree {Degree(*have)}, expected {want}")
        return problems


def _min_trunc(a: int | None, b: int | None) -> int | None:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _min_z(F: SuperFunction) -> int:
    return min(m.z for m in F.terms)


def component_degree(m: Monomial, declared: Degree = Degree(0, 0)) -> Degree:
    """Degree a component must carry so that its term has degree ``declared``."""
    return declared + m.degree


def component_atom(k: int, a: int, b: int, *, prefix: str = "g") -> sp.Expr:
    """The one-variable component ``g_{k a b}(x)`` as a function atom of ``u``."""
    name = f"{prefix}{k}{a}{b}" if k >= 0 else f"{prefix}m{-k}{a}{b}"
    deg = component_degree(Monomial(k, a, b))
    return function_atom(name, (x,), slots=("u",), degree=(deg.a1, deg.a2))


def generic_function(
    trunc: int = DEFAULT_TRUNCATION, laurent_depth: int = 0, *, prefix: str = "g", skip: Iterable = ()
) -> SuperFunction:
    """One fresh component atom per monomial of the window."""
    skip = {tuple(s) for s in skip}
    terms = {}
    for k in range(-laurent_depth, trunc + 1):
        for a, b in iproduct((0, 1), repeat=2):
            if (k, a, b) not in skip:
                terms[Monomial(k, a, b)] = component_atom(k, a, b, prefix=prefix)
    return SuperFunction(terms, laurent_depth=laurent_depth, trunc=trunc, declared_degree=Degree(0, 0))


# -- the eight-component (u, w) form -------------------------------------------

SLOTS = {
    "phi00": Monomial(0, 0, 0),
    "phi11t": Monomial(1, 0, 0),
    "psi01": Monomial(0, 1, 0),
    "psi10t": Monomial(1, 1, 0),
    "psi10": Monomial(0, 0, 1),
    "psi01t": Monomial(1, 0, 1),
    "A11": Monomial(0, 1, 1),
    "A00": Monomial(1, 1, 1),
}


@dataclass(frozen=True)
class EightComponentForm:
    """Slots as expressions in ``x`` (standing for ``u``) and ``y`` (standing for ``w = v**2``)."""

    phi00: sp.Expr = sp.Integer(0)
    phi11t: sp.Expr = sp.Integer(0)
    psi01: sp.Expr = sp.Integer(0)
    psi10t: sp.Expr = sp.Integer(0)
    psi10: sp.Expr = sp.Integer(0)
    psi01t: sp.Expr = sp.Integer(0)
    A11: sp.Expr = sp.Integer(0)
    A00: sp.Expr = sp.Integer(0)

    def items(self):
        return ((name, getattr(self, name)) for name in SLOTS)


def to_xy_form(F: SuperFunction) -> EightComponentForm:
    if F.laurent_depth > 0 and any(m.z < 0 for m in F.terms):
        raise LaurentNotSupported("the eight-component form needs a Taylor function")
    R = F.reduce()
    return EightComponentForm(**{name: R.slot(m.z, m.xi, m.eta) for name, m in SLOTS.items()})


def from_xy_form(form: EightComponentForm) -> SuperFunction:
    return SuperFunction({SLOTS[name]: c for name, c in form.items()}, reduced=True)


def slot_atoms(prefix: str = "") -> EightComponentForm:
    """Generic two-variable atoms ``phi00(u, w)`` etc. for every slot."""
    return EightComponentForm(
        **{name: function_atom(prefix + name, (x, y), slots=("u", "w")) for name in SLOTS}
    )


def coordinate(name: str) -> SuperFunction:
    """The coordinate function ``x``, ``z``, ``xi`` or ``eta`` in reduced form."""
    if name not in COORDINATE_DEGREES:
        raise ValueError(name)
    return SuperFunction.generator(name)
