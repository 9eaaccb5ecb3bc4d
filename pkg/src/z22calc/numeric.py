"""Concrete functions, binding environments, quadrature and random sampling."""

from __future__ import annotations

import functools
import inspect
from dataclasses import dataclass, field
from itertools import product as iproduct
from typing import Callable, Mapping, Sequence

import numpy as np
import sympy as sp
from numpy.polynomial import Polynomial

from .graded import Monomial
from .scalar import NonFiniteValue, x, y
from .superfunction import SLOTS, SuperFunction, component_atom, slot_atoms
from .transform import ATOM_NAMES, NAMES, CoordinateChange, validate

DEFAULT_DOMAIN = (-2.0, 2.0, 0.0, 2.0)
SUPPORT_BOX = (-1.5, 1.5, 0.1, 1.9)
# old-coordinate box that contains the preimage of DEFAULT_DOMAIN for sampled transforms
OLD_DOMAIN = (-2.5, 2.5, 0.0, 3.0)


class ResampleExhausted(RuntimeError):
    pass


# -- concrete functions -------------------------------------------------------


class Concrete:
    """A numeric function with ``derivative(index)``; subclasses define ``_deriv``."""

    arity = 1

    def __call__(self, *args):
        return self.derivative((0,) * self.arity)(*args)

    def derivative(self, index: Sequence[int]) -> Callable:
        index = tuple(index)
        if len(index) != self.arity:
            raise ValueError(f"expected a {self.arity}-index, got {index}")
        return self._deriv(index)

    def _deriv(self, index):  # pragma: no cover - abstract
        raise NotImplementedError


@functools.lru_cache(maxsize=None)
def _bump_numerators(poly: tuple[float, ...], n: int) -> tuple[Polynomial, ...]:
    """``N_0 .. N_n`` with ``d^k/dt^k [p(t) e^{-1/(1-t^2)}] = N_k(t) (1-t^2)^(-2k) e^{-1/(1-t^2)}``."""
    t = Polynomial([0, 1])
    q = 1 - t**2
    out = [Polynomial(poly)]
    for k in range(n):
        N = out[-1]
        m = 2 * k
        out.append(N.deriv() * q**2 + 2 * m * t * N * q - 2 * t * N)
    return tuple(out)


@dataclass(frozen=True)
class BumpFunction(Concrete):
    """``p(t) exp(-1/(1 - t^2))`` with ``t = (s - center) / half_width``, zero for ``|t| >= 1``."""

    center: float
    half_width: float
    poly_coeffs: tuple[float, ...] = (1.0,)

    def __post_init__(self) -> None:
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")
        object.__setattr__(self, "poly_coeffs", tuple(float(c) for c in self.poly_coeffs))

    @property
    def support(self) -> tuple[float, float]:
        return self.center - self.half_width, self.center + self.half_width

    def _deriv(self, index):
        (n,) = index
        N = _bump_numerators(self.poly_coeffs, n)[n]
        h = self.half_width

        def f(s):
            t = (np.asarray(s, dtype=float) - self.center) / h
            out = np.zeros_like(t)
            inside = np.abs(t) < 1
            ti = t[inside]
            q = 1 - ti**2
            out[inside] = N(ti) * np.exp(-1 / q - 2 * n * np.log(q))
            return out / h**n

        return f


@dataclass(frozen=True)
class BumpProduct(Concrete):
    """``a(u) * b(w)`` for two one-variable concretes."""

    first: Concrete
    second: Concrete
    scale: float = 1.0
    arity = 2

    def _deriv(self, index):
        f = self.first.derivative(index[:1])
        g = self.second.derivative(index[1:])
        return lambda u, w: self.scale * f(u) * g(w)


class ExprFunction(Concrete):
    """A sympy expression in ``variables``; derivatives are exact."""

    def __init__(self, expr, variables: Sequence[sp.Symbol] = (x, y)):
        self.expr = sp.sympify(expr)
        self.variables = tuple(variables)
        self.arity = len(self.variables)
        self._cache: dict = {}

    def __repr__(self) -> str:
        return f"ExprFunction({self.expr})"

    def _deriv(self, index):
        if index not in self._cache:
            e = self.expr
            for v, n in zip(self.variables, index):
                if n:
                    e = sp.diff(e, v, n)
            fn = sp.lambdify(self.variables, e, modules="numpy")
            self._cache[index] = lambda *args, _fn=fn: np.broadcast_to(
                np.asarray(_fn(*args), dtype=float), np.broadcast_shapes(*(np.shape(a) for a in args))
            )
        return self._cache[index]


class LinearCombination(Concrete):
    def __init__(self, parts: Sequence[tuple[float, Concrete]]):
        self.parts = tuple(parts)
        arities = {p.arity for _, p in self.parts}
        if len(arities) != 1:
            raise ValueError("mixed arities")
        self.arity = arities.pop()

    def _deriv(self, index):
        fs = [(c, p.derivative(index)) for c, p in self.parts]
        return lambda *args: sum(c * f(*args) for c, f in fs)


class FiniteDifference(Concrete):
    """Wraps a plain callable; derivatives by nested central differences with step ``h``."""

    def __init__(self, fn: Callable, arity: int, h: float = 1e-4):
        self.fn = fn
        self.arity = arity
        self.h = h

    def _deriv(self, index):
        f = self.fn
        for axis, n in enumerate(index):
            for _ in range(n):
                f = self._central(f, axis)
        return f

    def _central(self, f, axis):
        h = self.h

        def g(*args):
            lo = list(args)
            hi = list(args)
            lo[axis] = np.asarray(args[axis], dtype=float) - h
            hi[axis] = np.asarray(args[axis], dtype=float) + h
            return (f(*hi) - f(*lo)) / (2 * h)

        return g


class ZeroFunction(Concrete):
    def __init__(self, arity: int = 1):
        self.arity = arity

    def _deriv(self, index):
        return lambda *args: np.zeros(np.broadcast_shapes(*(np.shape(a) for a in args)))


class BindingEnv(dict):
    """Atom base name -> :class:`Concrete`.  Plain callables are wrapped with finite differences."""

    def __init__(self, bindings: Mapping | None = None, *, fd_step: float = 1e-4):
        super().__init__()
        self.fd_step = fd_step
        for k, v in (bindings or {}).items():
            self[k] = v

    def __setitem__(self, name: str, fn) -> None:
        if not isinstance(fn, Concrete):
            if isinstance(fn, (sp.Expr, int, float)):
                fn = ExprFunction(fn)
            elif callable(fn):
                arity = len(inspect.signature(fn).parameters)
                fn = FiniteDifference(fn, arity, self.fd_step)
            else:
                raise TypeError(f"cannot bind {name!r} to {fn!r}")
        super().__setitem__(name, fn)

    @classmethod
    def for_transform(cls, T: CoordinateChange) -> BindingEnv:
        """Bind the generic transform atoms to the explicit functions of ``T``."""
        return cls({ATOM_NAMES[n]: ExprFunction(e) for n, e in T.as_dict().items()})


# -- quadrature -----------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def _gl(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def composite_nodes(a: float, b: float, order: int, panels: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = _gl(order)
    edges = np.linspace(a, b, panels + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    nodes = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def quad1d(f: Callable, a: float, b: float, order: int = 64, panels: int = 32) -> float:
    s, w = composite_nodes(a, b, order, panels)
    vals = np.asarray(f(s), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NonFiniteValue("integrand is not finite on the quadrature grid")
    return float(vals @ w)


@functools.lru_cache(maxsize=32)
def tensor_grid(D: tuple[float, ...], order: int, panels: int):
    """Nodes ``(u[:, None], v[None, :])`` and weights of the composite rule on ``D``."""
    x0, x1, y0, y1 = D
    u, wu = composite_nodes(x0, x1, order, panels)
    v, wv = composite_nodes(y0, y1, order, panels)
    return u[:, None], v[None, :], wu, wv


def quad2d(f: Callable, D: Sequence[float] = DEFAULT_DOMAIN, order: int = 64, panels: int = 8) -> float:
    """Tensor-product composite Gauss-Legendre estimate of ``int_D f(u, w)``.

    ``order`` points per panel, ``panels`` panels per axis.  ``f`` takes two
    broadcastable arrays.
    """
    u, v, wu, wv = tensor_grid(tuple(float(d) for d in D), order, panels)
    vals = np.asarray(f(u, v), dtype=float)
    vals = np.broadcast_to(vals, (u.size, v.size))
    return weighted_sum(vals, wu, wv)


def weighted_sum(vals: np.ndarray, wu: np.ndarray, wv: np.ndarray) -> float:
    if not np.all(np.isfinite(vals)):
        raise NonFiniteValue("integrand is not finite on the quadrature grid")
    return float(wu @ vals @ wv)


def boundary_max(f: Callable, D: Sequence[float], points: int = 257) -> float:
    """Largest ``|f|`` on the edges of the rectangle ``D``."""
    x0, x1, y0, y1 = D
    s = np.linspace(x0, x1, points)
    t = np.linspace(y0, y1, points)
    edges = [
        f(s, np.full_like(s, y0)),
        f(s, np.full_like(s, y1)),
        f(np.full_like(t, x0), t),
        f(np.full_like(t, x1), t),
    ]
    return float(max(np.max(np.abs(np.asarray(e, dtype=float))) for e in edges))


# -- sampling -------------------------------------------------------------------

_MONOMIALS_2 = [(i, j) for i in range(3) for j in range(3) if i + j <= 2]


def _random_poly(rng: np.random.Generator, scale_x: float, scale_y: float, *, y_factor: bool = False) -> sp.Expr:
    """Exact rational polynomial of total degree <= 2 in ``x/scale_x``, ``y/scale_y`` with sum |coeff| <= 1."""
    nums = rng.integers(-4, 5, size=len(_MONOMIALS_2))
    total = int(np.abs(nums).sum()) or 1
    X = x / sp.nsimplify(scale_x)
    Y = y / sp.nsimplify(scale_y)
    p = sp.Add(*[sp.Rational(int(n), total) * X**i * Y**j for n, (i, j) in zip(nums, _MONOMIALS_2)])
    return sp.expand(Y * p if y_factor else p)


def sample_transform(
    eps: float = 0.1,
    seed: int = 0,
    *,
    anchored: bool = False,
    domain: Sequence[float] = OLD_DOMAIN,
    margin: float = 0.5,
    retries: int = 50,
) -> CoordinateChange:
    """Near-identity transform with exact rational polynomial entries.

    ``fU = x + eps p``, ``fV = 1 + eps q``, ``fZeta = 1 + eps r1``,
    ``fTheta = 1 + eps r2`` and every ``g`` equal to ``eps s_i``.  With
    ``anchored`` the perturbation of ``fV`` carries a factor ``y`` so that
    ``fV(x, 0) = 1``.  Retries until :func:`validate` reports minima above
    ``margin`` on ``domain``.
    """
    if not 0 <= eps <= 0.2:
        raise ValueError("eps must lie in [0, 0.2]")
    e = sp.nsimplify(eps)
    sx, sy = max(abs(domain[0]), abs(domain[1])), max(abs(domain[2]), abs(domain[3]))
    rng = np.random.default_rng([seed, 0x5EED])
    for _ in range(retries):
        polys = [_random_poly(rng, sx, sy, y_factor=anchored and n == "fV") for n in NAMES]
        base = CoordinateChange.identity().as_dict()
        entries = {n: sp.expand(base[n] + e * p) for n, p in zip(NAMES, polys)}
        T = CoordinateChange(**entries)
        if validate(T, domain, margin).valid:
            return T
    raise ResampleExhausted(f"no valid transform after {retries} draws (eps={eps}, seed={seed})")


def _random_bump(rng: np.random.Generator, lo: float, hi: float) -> BumpFunction:
    hw = rng.uniform(0.4, (hi - lo) / 2)
    c = rng.uniform(lo + hw, hi - hw)
    coeffs = tuple(np.round(rng.uniform(-1, 1, size=3), 6))
    coeffs = (1.0 + abs(coeffs[0]),) + coeffs[1:]
    return BumpFunction(float(c), float(hw), coeffs)


@dataclass
class SampledFunction:
    """A superfunction whose components are atoms, plus numeric bindings for them."""

    function: SuperFunction
    env: BindingEnv
    components: dict[tuple[int, int, int], Concrete] = field(default_factory=dict)

    def nonzero(self) -> set[tuple[int, int, int]]:
        return set(self.components)


def sample_function(
    seed: int,
    window: tuple[int, int] = (0, 8),
    *,
    restrict: Sequence[tuple[int, int, int]] = (),
    density: float = 0.5,
    support: tuple[float, float] = SUPPORT_BOX[:2],
    prefix: str = "g",
) -> SampledFunction:
    """Series-mode function with one-variable bump components in ``u``.

    Each slot is filled with probability ``density``; slots in ``restrict``
    are always zero.
    """
    M, K = window
    rng = np.random.default_rng([seed, 0xF00])
    restrict = {tuple(r) for r in restrict}
    terms, env, comps = {}, BindingEnv(), {}
    for k in range(-M, K + 1):
        for a, b in iproduct((0, 1), repeat=2):
            filled = rng.random() < density
            bump = _random_bump(rng, *support)
            if not filled or (k, a, b) in restrict:
                continue
            atom = component_atom(k, a, b, prefix=prefix)
            terms[Monomial(k, a, b)] = atom
            env[atom.base] = bump
            comps[(k, a, b)] = bump
    F = SuperFunction(terms, laurent_depth=M, trunc=K)
    return SampledFunction(F, env, comps)


def sample_slots(
    seed: int,
    *,
    only: Sequence[str] | None = None,
    box: Sequence[float] = SUPPORT_BOX,
    prefix: str = "",
) -> SampledFunction:
    """Eight-component function with every slot a product of bumps in ``(u, w)``.

    Returns a reduced-mode superfunction over the generic slot atoms; slots not
    listed in ``only`` are bound to zero.
    """
    rng = np.random.default_rng([seed, 0x8C])
    atoms = slot_atoms(prefix)
    env, comps, terms = BindingEnv(), {}, {}
    for name, mono in SLOTS.items():
        f = BumpProduct(_random_bump(rng, box[0], box[1]), _random_bump(rng, box[2], box[3]), float(rng.uniform(0.5, 2)))
        atom = getattr(atoms, name)
        if only is not None and name not in only:
            env[atom.base] = ZeroFunction(2)
            continue
        env[atom.base] = f
        comps[(mono.z, mono.xi, mono.eta)] = f
        terms[mono] = atom
    return SampledFunction(SuperFunction(terms, reduced=True), env, comps)
