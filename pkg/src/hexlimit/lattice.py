"""Exact coordinates on the triangular lattice Q and its index-3 superlattice P.

Q is spanned by a1 = (1, 0) and a2 = (-1/2, sqrt(3)/2).  P is spanned by
w1 = (2 a1 + a2) / 3 and w2 = (a1 + 2 a2) / 3.  Hexagonal tiles are centred
on Q; their corners are the points of P outside Q.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import total_ordering

import numpy as np


@total_ordering
class _Infinity:
    """2-adic valuation of zero.  Compares above every integer."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __eq__(self, other):
        return other is self

    def __lt__(self, other):
        return False

    def __gt__(self, other):
        return other is not self

    def __hash__(self):
        return hash("hexlimit.INF")

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()


class ADir(enum.IntEnum):
    """Directions of a-lines (short diameters): a1, a2, a1 + a2."""

    A1 = 0
    A2 = 1
    A12 = 2

    def rotate(self) -> "ADir":
        # 2pi/3 turn: a1 -> a2 -> -(a1 + a2) -> a1
        return ADir((self + 1) % 3)


class WDir(enum.IntEnum):
    """Directions of w-lines (long diameters): w1, w2, w2 - w1."""

    W1 = 0
    W2 = 1
    W21 = 2

    def rotate(self) -> "WDir":
        # 2pi/3 turn: w1 -> w2 - w1 -> -w2 -> w1 (as unoriented lines)
        return {WDir.W1: WDir.W21, WDir.W21: WDir.W2, WDir.W2: WDir.W1}[self]


class Coset(enum.IntEnum):
    Q = 0
    W1 = 1
    W2 = 2


@dataclass(frozen=True, slots=True, order=True)
class QPoint:
    """m a1 + n a2."""

    m: int
    n: int

    def __add__(self, other: "QPoint") -> "QPoint":
        return QPoint(self.m + other.m, self.n + other.n)

    def __sub__(self, other: "QPoint") -> "QPoint":
        return QPoint(self.m - other.m, self.n - other.n)

    def __neg__(self) -> "QPoint":
        return QPoint(-self.m, -self.n)

    def __mul__(self, k: int) -> "QPoint":
        return QPoint(k * self.m, k * self.n)

    __rmul__ = __mul__

    def to_ppoint(self) -> "PPoint":
        # a1 = 2 w1 - w2, a2 = -w1 + 2 w2
        return PPoint(2 * self.m - self.n, -self.m + 2 * self.n)


@dataclass(frozen=True, slots=True, order=True)
class PPoint:
    """p w1 + q w2."""

    p: int
    q: int

    def __add__(self, other: "PPoint") -> "PPoint":
        return PPoint(self.p + other.p, self.q + other.q)

    def __sub__(self, other: "PPoint") -> "PPoint":
        return PPoint(self.p - other.p, self.q - other.q)

    def __neg__(self) -> "PPoint":
        return PPoint(-self.p, -self.q)

    def __mul__(self, k: int) -> "PPoint":
        return PPoint(k * self.p, k * self.q)

    __rmul__ = __mul__

    def coset(self) -> Coset:
        return coset_of(self)

    def to_qpoint(self) -> QPoint:
        if (self.p - self.q) % 3:
            raise ValueError(f"{self} is not in Q")
        # inverse of the a -> w change of basis
        return QPoint((2 * self.p + self.q) // 3, (self.p + 2 * self.q) // 3)


@dataclass(frozen=True, slots=True)
class TripleCoord:
    x1: int
    x2: int
    x3: int

    def __post_init__(self):
        if self.x1 + self.x2 + self.x3 != 0:
            raise ValueError(f"triple coordinates must sum to zero: {self}")

    def __iter__(self):
        return iter((self.x1, self.x2, self.x3))

    def __getitem__(self, i: int) -> int:
        return (self.x1, self.x2, self.x3)[i % 3]

    def rotate(self) -> "TripleCoord":
        """Counterclockwise turn by 2pi/3."""
        return TripleCoord(self.x3, self.x1, self.x2)


W1 = PPoint(1, 0)
W2 = PPoint(0, 1)
A1 = QPoint(1, 0)
A2 = QPoint(0, 1)

# Step 3w along each w-line, in a-coordinates.
W_STEP = {WDir.W1: QPoint(2, 1), WDir.W2: QPoint(1, 2), WDir.W21: QPoint(-1, 1)}
# Unit vector along each w-direction, in w-coordinates.
W_UNIT = {WDir.W1: PPoint(1, 0), WDir.W2: PPoint(0, 1), WDir.W21: PPoint(-1, 1)}
A_UNIT = {ADir.A1: QPoint(1, 0), ADir.A2: QPoint(0, 1), ADir.A12: QPoint(1, 1)}
HEX_NEIGHBOURS = (
    QPoint(1, 0), QPoint(1, 1), QPoint(0, 1),
    QPoint(-1, 0), QPoint(-1, -1), QPoint(0, -1),
)


def to_triple(x: QPoint) -> TripleCoord:
    return TripleCoord(x.n, -x.m, x.m - x.n)


def from_triple(t: TripleCoord) -> QPoint:
    return QPoint(-t.x2, t.x1)


def val2(z: int):
    """2-adic valuation; INF for zero."""
    if z == 0:
        return INF
    z = abs(z)
    return (z & -z).bit_length() - 1


def dval(z: int):
    """Largest power of two dividing z; INF for zero."""
    v = val2(z)
    return INF if v is INF else 1 << v


def coset_of(x: PPoint | QPoint) -> Coset:
    if isinstance(x, QPoint):
        return Coset.Q
    return Coset((x.p - x.q) % 3)


def hex_distance(x: QPoint, y: QPoint = QPoint(0, 0)) -> int:
    dm, dn = x.m - y.m, x.n - y.n
    return max(abs(dm), abs(dn), abs(dm - dn))


def hex_ball_array(radius: int, center: QPoint = QPoint(0, 0)) -> np.ndarray:
    """(N, 2) int64 array of a-coordinates, sorted lexicographically."""
    if radius < 0:
        raise ValueError("radius must be non-negative")
    r = np.arange(-radius, radius + 1, dtype=np.int64)
    m, n = np.meshgrid(r, r, indexing="ij")
    m, n = m.ravel(), n.ravel()
    keep = np.abs(m - n) <= radius
    pts = np.stack([m[keep] + center.m, n[keep] + center.n], axis=1)
    return pts


def hex_ball(radius: int, center: QPoint = QPoint(0, 0)) -> list[QPoint]:
    return [QPoint(int(m), int(n)) for m, n in hex_ball_array(radius, center)]


def hex_ball_size(radius: int) -> int:
    return 1 + 3 * radius * (radius + 1)


_SQRT3 = math.sqrt(3.0)


def cartesian(x: PPoint | QPoint) -> tuple[float, float]:
    """Euclidean embedding; rendering only."""
    if isinstance(x, PPoint):
        # w1 = (1/2, 1/(2 sqrt3)), w2 = (0, 1/sqrt3)
        return (0.5 * x.p, (x.p + 2 * x.q) / (2 * _SQRT3))
    return (x.m - 0.5 * x.n, 0.5 * _SQRT3 * x.n)


def cartesian_array(pts: np.ndarray) -> np.ndarray:
    """Cartesian coordinates of an (N, 2) array of a-coordinates."""
    pts = np.asarray(pts, dtype=np.float64)
    return np.stack([pts[:, 0] - 0.5 * pts[:, 1], 0.5 * _SQRT3 * pts[:, 1]], axis=1)


def gram6(u: PPoint, v: PPoint) -> int:
    """Six times the Euclidean inner product of two w-coordinate vectors."""
    # |w1|^2 = |w2|^2 = 1/3, w1.w2 = 1/6
    return 2 * u.p * v.p + 2 * u.q * v.q + u.p * v.q + u.q * v.p
