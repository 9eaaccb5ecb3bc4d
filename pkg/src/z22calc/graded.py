"""Z2 x Z2 degrees, the commutation sign rule, and signed monomials in z, xi, eta."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, order=True)
class Degree:
    a1: int
    a2: int

    def __post_init__(self) -> None:
        if self.a1 not in (0, 1) or self.a2 not in (0, 1):
            raise ValueError(f"degree components must be bits, got ({self.a1}, {self.a2})")

    def __add__(self, other: Degree) -> Degree:
        return Degree((self.a1 + other.a1) % 2, (self.a2 + other.a2) % 2)

    def __mul__(self, n: int) -> Degree:
        return Degree((self.a1 * n) % 2, (self.a2 * n) % 2)

    __rmul__ = __mul__

    def dot(self, other: Degree) -> int:
        return (self.a1 * other.a1 + self.a2 * other.a2) % 2

    def __str__(self) -> str:
        return f"({self.a1},{self.a2})"


ZERO = Degree(0, 0)
X_DEGREE = Degree(0, 0)
XI_DEGREE = Degree(0, 1)
ETA_DEGREE = Degree(1, 0)
Z_DEGREE = Degree(1, 1)

ALL_DEGREES = (Degree(0, 0), Degree(0, 1), Degree(1, 0), Degree(1, 1))

COORDINATE_DEGREES = {"x": X_DEGREE, "z": Z_DEGREE, "xi": XI_DEGREE, "eta": ETA_DEGREE}


def sign(a: Degree, b: Degree) -> int:
    """Sign picked up when a degree-``a`` element is moved past a degree-``b`` one."""
    return -1 if a.dot(b) else 1


@dataclass(frozen=True, order=True)
class Monomial:
    """``z**z * xi**xi * eta**eta`` in canonical order; ``z`` may be negative."""

    z: int = 0
    xi: int = 0
    eta: int = 0

    def __post_init__(self) -> None:
        if self.xi not in (0, 1) or self.eta not in (0, 1):
            raise ValueError("xi and eta powers must be 0 or 1")

    @property
    def degree(self) -> Degree:
        return Z_DEGREE * self.z + XI_DEGREE * self.xi + ETA_DEGREE * self.eta

    @property
    def fermions(self) -> int:
        return self.xi + self.eta

    def __str__(self) -> str:
        parts = []
        if self.z == 1:
            parts.append("z")
        elif self.z:
            parts.append(f"z^{self.z}")
        if self.xi:
            parts.append("xi")
        if self.eta:
            parts.append("eta")
        return "*".join(parts) or "1"


ONE = Monomial(0, 0, 0)


def monomial_mul(m1: Monomial, m2: Monomial) -> tuple[int, Monomial] | None:
    """Product ``m1 * m2`` brought back to canonical order.

    Returns ``None`` when a nilpotent generator would appear twice.  Only
    ``z**m2.z`` has to travel past the fermions of ``m1``; xi and eta commute.
    """
    if m1.xi + m2.xi > 1 or m1.eta + m2.eta > 1:
        return None
    s = -1 if (m2.z * m1.fermions) % 2 else 1
    return s, Monomial(m1.z + m2.z, m1.xi + m2.xi, m1.eta + m2.eta)
