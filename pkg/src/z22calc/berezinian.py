"""The Z2 x Z2 Berezinian of a coordinate change, computed two independent ways."""

from __future__ import annotations

from dataclasses import dataclass

import sympy as sp

from .graded import Monomial
from .scalar import diff, equal, is_zero, normalize, x, y
from .superfunction import SuperFunction
from .transform import CoordinateChange, GradedJacobian

BODY = Monomial(0, 0, 0)
SOUL = Monomial(1, 1, 1)

Matrix = list[list[SuperFunction]]


class SingularD(ZeroDivisionError):
    pass


class BerezinianShapeError(ArithmeticError):
    """The direct computation produced monomials other than ``1`` and ``z xi eta``."""


@dataclass(frozen=True)
class Berezinian:
    body: sp.Expr
    soul: sp.Expr

    def as_superfunction(self) -> SuperFunction:
        return SuperFunction({BODY: self.body, SOUL: self.soul}, reduced=True)

    def equals(self, other: Berezinian) -> bool:
        return equal(self.body, other.body) and equal(self.soul, other.soul)

    def normalized(self) -> Berezinian:
        return Berezinian(normalize(self.body), normalize(self.soul))


def ber_closed(T: CoordinateChange) -> Berezinian:
    """``J^B / det D + G z xi eta`` from the eight functions of ``T``."""
    dd = T.det_d()
    if is_zero(dd):
        raise SingularD("det D vanishes identically")
    fux, fuy = diff(T.fU, x), diff(T.fU, y)
    fvx, fvy = diff(T.fV, x), diff(T.fV, y)
    jx = ((T.fV + 2 * y * fvy) * T.gU - 2 * fuy * T.gV) / dd
    jy = 2 * (fux * T.gV - y * fvx * T.gU) / dd
    return Berezinian(T.jb() / dd, diff(jx, x) + diff(jy, y))


def _matmul(P: Matrix, Q: Matrix) -> Matrix:
    n, m, k = len(P), len(Q[0]), len(Q)
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            acc = SuperFunction(reduced=True)
            for t in range(k):
                acc = acc + P[i][t] * Q[t][j]
            row.append(acc)
        out.append(row)
    return out


def _matsub(P: Matrix, Q: Matrix) -> Matrix:
    return [[p - q for p, q in zip(rp, rq)] for rp, rq in zip(P, Q)]


def _det2(M: Matrix) -> SuperFunction:
    # off-diagonal entries have equal degree and commute, so the order is immaterial
    return M[0][0] * M[1][1] - M[0][1] * M[1][0]


def _split(F: SuperFunction) -> tuple[SuperFunction, SuperFunction]:
    body = SuperFunction({m: c for m, c in F.terms.items() if not m.fermions}, reduced=True)
    return body, F - body


def invert_d(D: Matrix) -> Matrix:
    """Inverse of the fermionic block by body/nilpotent splitting.

    ``D = D0 + N`` with ``D0`` free of xi and eta; its entries lie in the
    commutative subring generated by ``x``, ``z`` so the adjugate formula
    applies.  Then ``D**-1 = sum_j (-D0**-1 N)**j D0**-1``, which terminates.
    """
    parts = [[_split(e) for e in row] for row in D]
    D0 = [[p[0] for p in row] for row in parts]
    N = [[p[1] for p in row] for row in parts]
    det0 = _det2(D0)
    a = det0.slot(0, 0, 0)
    b = det0.slot(1, 0, 0)
    if is_zero(a**2 - y * b**2):
        raise SingularD("body of det D vanishes identically")
    inv_det = det0.inverse()
    D0inv = [[D0[1][1] * inv_det, -(D0[0][1] * inv_det)], [-(D0[1][0] * inv_det), D0[0][0] * inv_det]]
    step = [[-e for e in row] for row in _matmul(D0inv, N)]
    out = D0inv
    power = D0inv
    for _ in range(3):
        power = _matmul(step, power)
        if all(not e for row in power for e in row):
            break
        out = [[p + q for p, q in zip(rp, rq)] for rp, rq in zip(out, power)]
    return out


def ber_direct(J: GradedJacobian) -> Berezinian:
    """``det(A - B D**-1 C) / det D`` evaluated in the superfunction ring."""
    Dinv = invert_d(J.D)
    schur = _matsub(J.A, _matmul(_matmul(J.B, Dinv), J.C))
    gamma = _det2(schur) * _det2(J.D).inverse()
    stray = [m for m, c in gamma.terms.items() if m not in (BODY, SOUL) and not is_zero(c)]
    if stray:
        raise BerezinianShapeError(f"unexpected monomials {stray}")
    return Berezinian(gamma.slot(0, 0, 0), gamma.slot(1, 1, 1))
