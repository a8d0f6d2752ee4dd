"""2-adic scalars, the tiling parameter q in the Q-adic completion, and the
classification of parameters whose triangulation has infinite-level lines.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from fractions import Fraction

from .lattice import PPoint, QPoint, WDir, ADir


class InsufficientDepth(ValueError):
    pass


class NotExact(ValueError):
    pass


class QSpecError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class Dyadic:
    """A 2-adic integer: a rational with odd denominator, or a class mod 2**depth.

    Exactly one of ``exact`` / ``depth`` is set.  Residue values are kept in
    [0, 2**depth).
    """

    exact: Fraction | None = None
    value: int = 0
    depth: int | None = None

    def __post_init__(self):
        if self.exact is not None:
            if self.exact.denominator % 2 == 0:
                raise ValueError(f"{self.exact} is not a 2-adic integer")
        elif self.depth is None or self.depth < 0:
            raise ValueError("residue needs a non-negative depth")
        elif not 0 <= self.value < (1 << self.depth):
            object.__setattr__(self, "value", self.value % (1 << self.depth))

    @classmethod
    def of(cls, num: int | Fraction, den: int = 1) -> "Dyadic":
        return cls(exact=Fraction(num, den))

    @classmethod
    def residue(cls, value: int, depth: int) -> "Dyadic":
        return cls(value=value, depth=depth)

    @property
    def is_exact(self) -> bool:
        return self.exact is not None

    @property
    def known_depth(self) -> float:
        return float("inf") if self.is_exact else self.depth

    def mod(self, k: int) -> int:
        """Canonical representative in [0, 2**k)."""
        if k < 0:
            raise ValueError("negative depth")
        modulus = 1 << k
        if self.is_exact:
            num, den = self.exact.numerator, self.exact.denominator
            return num * pow(den, -1, modulus) % modulus if k else 0
        if k > self.depth:
            raise InsufficientDepth(f"known to depth {self.depth}, asked for {k}")
        return self.value % modulus

    def truncate(self, k: int) -> "Dyadic":
        return Dyadic.residue(self.mod(k), k)

    def is_integer(self) -> bool:
        if not self.is_exact:
            raise NotExact("integrality of a residue class is undecidable")
        return self.exact.denominator == 1

    def _combine(self, other, op) -> "Dyadic":
        if isinstance(other, int):
            other = Dyadic.of(other)
        if self.is_exact and other.is_exact:
            return Dyadic(exact=op(self.exact, other.exact))
        # residue results live at the smaller of the two known depths
        k = int(min(self.known_depth, other.known_depth))
        return Dyadic.residue(op(self.mod(k), other.mod(k)), k)

    def __add__(self, other):
        return self._combine(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return Dyadic.of(other) - self

    def __mul__(self, other):
        return self._combine(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def __repr__(self):
        if self.is_exact:
            return f"Dyadic({self.exact})"
        return f"Dyadic({self.value} mod 2^{self.depth})"


def _as_dyadic(x) -> Dyadic:
    if isinstance(x, Dyadic):
        return x
    return Dyadic(exact=Fraction(x))


@dataclass(frozen=True, slots=True)
class QadicParam:
    """q = u a1 + v a2 with 2-adic coefficients."""

    u: Dyadic
    v: Dyadic

    @classmethod
    def exact(cls, u, v) -> "QadicParam":
        return cls(_as_dyadic(u), _as_dyadic(v))

    @classmethod
    def from_residue(cls, u: int, v: int, depth: int) -> "QadicParam":
        return cls(Dyadic.residue(u, depth), Dyadic.residue(v, depth))

    @property
    def is_exact(self) -> bool:
        return self.u.is_exact and self.v.is_exact

    @property
    def depth(self) -> float:
        return min(self.u.known_depth, self.v.known_depth)

    def residue(self, k: int) -> QPoint:
        return residue(self, k)

    def __add__(self, x: "QadicParam | QPoint") -> "QadicParam":
        if isinstance(x, QPoint):
            return QadicParam(self.u + x.m, self.v + x.n)
        return QadicParam(self.u + x.u, self.v + x.v)

    def __sub__(self, x: "QadicParam | QPoint") -> "QadicParam":
        if isinstance(x, QPoint):
            return QadicParam(self.u - x.m, self.v - x.n)
        return QadicParam(self.u - x.u, self.v - x.v)

    def __mul__(self, k: int) -> "QadicParam":
        return QadicParam(self.u * k, self.v * k)

    __rmul__ = __mul__


def residue(q: QadicParam, k: int) -> QPoint:
    """Canonical representative c_k of q mod 2^k Q, coordinates in [0, 2^k)."""
    return QPoint(q.u.mod(k), q.v.mod(k))


# ---------------------------------------------------------------- q-spec strings

_RAT = r"(-?\d+)(?:/(\d+))?"
_QSPEC_PATTERNS = {
    "rat": re.compile(rf"^rat:{_RAT},{_RAT}$"),
    "res": re.compile(r"^res:K=(\d+);u=(-?\d+);v=(-?\d+)$"),
    "cht": re.compile(r"^cht:(-?\d+),(-?\d+)$"),
    "icwl": re.compile(r"^icwl:(up|down)(?:\+(-?\d+),(-?\d+))?$"),
}


def parse_qspec(spec: str) -> QadicParam:
    spec = spec.strip()
    kind = spec.split(":", 1)[0]
    pattern = _QSPEC_PATTERNS.get(kind)
    match = pattern.match(spec) if pattern else None
    if match is None:
        raise QSpecError(f"malformed q-spec {spec!r}")
    g = match.groups()
    if kind == "rat":
        u = Fraction(int(g[0]), int(g[1] or 1))
        v = Fraction(int(g[2]), int(g[3] or 1))
        if u.denominator % 2 == 0 or v.denominator % 2 == 0:
            raise QSpecError(f"{spec!r}: denominators must be odd")
        return QadicParam.exact(u, v)
    if kind == "res":
        depth = int(g[0])
        return QadicParam.from_residue(int(g[1]), int(g[2]), depth)
    if kind == "cht":
        return QadicParam.exact(int(g[0]), int(g[1]))
    m, n = int(g[1] or 0), int(g[2] or 0)
    if g[0] == "up":
        return QadicParam.exact(Fraction(2, 3) + m, Fraction(1, 3) + n)
    return QadicParam.exact(Fraction(1, 3) + m, Fraction(2, 3) + n)


def format_qspec(q: QadicParam) -> str:
    if q.is_exact:
        return f"rat:{q.u.exact},{q.v.exact}"
    k = int(q.depth)
    return f"res:K={k};u={q.u.mod(k)};v={q.v.mod(k)}"


# ---------------------------------------------------------------- s constants

S1 = QadicParam.exact(Fraction(-1, 3), 0)
S2 = QadicParam.exact(0, Fraction(-1, 3))


def s_partial(index: int, k: int) -> QPoint:
    """s_index^(k) = a_index (1 + 4 + ... + 4^k); zero for k = -1."""
    total = ((1 << (2 * k + 2)) - 1) // 3 if k >= 0 else 0
    return QPoint(total, 0) if index == 1 else QPoint(0, total)


# ---------------------------------------------------------------- P-bar

@dataclass(frozen=True, slots=True)
class PbarElem:
    """Element of the completion of P in Smith coordinates.

    P / 2^k Q  ~  Z/2^k  +  Z/(3 2^k).  The second summand splits as
    Z/3 x Z/2^k; ``torsion`` is its Z/3 part and ``d`` the 2-adic part.
    Smith coordinates of p w1 + q w2 are (-q, p + 2 q).
    """

    e1: Dyadic
    torsion: int
    d: Dyadic

    def __post_init__(self):
        object.__setattr__(self, "torsion", self.torsion % 3)

    @classmethod
    def from_ppoint(cls, x: PPoint) -> "PbarElem":
        e2 = x.p + 2 * x.q
        return cls(Dyadic.of(-x.q), e2, Dyadic.of(e2))

    @classmethod
    def from_qpoint(cls, x: QPoint) -> "PbarElem":
        return cls.from_ppoint(x.to_ppoint())

    @classmethod
    def from_param(cls, q: QadicParam) -> "PbarElem":
        # u a1 + v a2  ->  e1 = u - 2v, e2 = 3v (no Z/3 part)
        return cls(q.u - q.v * 2, 0, q.v * 3)

    def __add__(self, other: "PbarElem") -> "PbarElem":
        return PbarElem(self.e1 + other.e1, self.torsion + other.torsion, self.d + other.d)

    def __neg__(self) -> "PbarElem":
        return PbarElem(-self.e1, -self.torsion, -self.d)

    def __sub__(self, other: "PbarElem") -> "PbarElem":
        return self + (-other)

    def __mul__(self, k: int) -> "PbarElem":
        return PbarElem(self.e1 * k, self.torsion * k, self.d * k)

    __rmul__ = __mul__

    def is_zero(self, depth: int) -> bool:
        """Zero in P / 2^depth Q."""
        return self.torsion == 0 and self.e1.mod(depth) == 0 and self.d.mod(depth) == 0

    def equals(self, other: "PbarElem", depth: int) -> bool:
        return (self - other).is_zero(depth)


def lemma_s_check(k: int) -> bool:
    """Check the scaling identities for 2^(2k) w and 2^(2k+1) w (both w1 and w2)."""
    if k < 0:
        raise ValueError("k must be non-negative")
    depth = 2 * k + 2
    w = {1: PPoint(1, 0), 2: PPoint(0, 1)}
    ok = True
    for i, j in ((1, 2), (2, 1)):
        wi, wj = PbarElem.from_ppoint(w[i]), PbarElem.from_ppoint(w[j])
        si = lambda kk: PbarElem.from_qpoint(s_partial(i, kk))
        sj = lambda kk: PbarElem.from_qpoint(s_partial(j, kk))
        even = wi * (1 << (2 * k))
        ok &= even.equals(wi + sj(k - 1) + si(k - 1) * 2, depth)
        odd = wi * (1 << (2 * k + 1))
        ok &= odd.equals(wj + si(k) + sj(k - 1) * 2, depth)
        # the partial sums may be replaced by the limits modulo 2^(2k)
        exact_s = {1: PbarElem.from_param(S1), 2: PbarElem.from_param(S2)}
        ok &= even.equals(wi + exact_s[j] + exact_s[i] * 2, 2 * k)
    return bool(ok)


def torsion_elements() -> tuple[PbarElem, PbarElem]:
    """w1 + s2 + 2 s1 and w2 + s1 + 2 s2."""
    s1, s2 = PbarElem.from_param(S1), PbarElem.from_param(S2)
    t1 = PbarElem.from_ppoint(PPoint(1, 0)) + s2 + s1 * 2
    t2 = PbarElem.from_ppoint(PPoint(0, 1)) + s1 + s2 * 2
    return t1, t2


def torsion_check(max_depth: int = 64) -> bool:
    t1, t2 = torsion_elements()
    for depth in range(1, max_depth + 1):
        for t in (t1, t2):
            if not (t * 3).is_zero(depth) or t.is_zero(depth):
                return False
    return True


# ---------------------------------------------------------------- classification

class Verdict(enum.Enum):
    GENERIC = "Generic"
    IAL = "IaL"
    IWL = "IwL"
    CHT = "CHT"
    ICWL = "ICwL"


@dataclass(frozen=True, slots=True)
class SingularClass:
    verdict: Verdict
    fiber: int
    direction: ADir | WDir | None = None
    branch: str | None = None
    depth: float = float("inf")

    def __str__(self) -> str:
        if self.verdict is Verdict.GENERIC:
            depth = "inf" if self.depth == float("inf") else int(self.depth)
            label = f"GenericToDepth({depth})"
        elif self.verdict in (Verdict.IAL, Verdict.IWL):
            label = f"{self.verdict.value}({self.direction.name})"
        elif self.verdict is Verdict.ICWL:
            label = f"ICwL({self.branch})"
        else:
            label = "CHT"
        return f"{label}, fiber {self.fiber}"


def _is_int(x: Fraction) -> bool:
    return x.denominator == 1


def classify(q: QadicParam) -> SingularClass:
    """Infinite-level line structure of an exact parameter.

    Order CHT > ICwL > IaL > IwL; outside CHT the conditions are disjoint.
    """
    if not q.is_exact:
        raise NotExact("only exact parameters can be classified")
    u, v = q.u.exact, q.v.exact
    if _is_int(u) and _is_int(v):
        return SingularClass(Verdict.CHT, 12)
    if _is_int(u - Fraction(2, 3)) and _is_int(v - Fraction(1, 3)):
        return SingularClass(Verdict.ICWL, 6, branch="Up")
    if _is_int(u - Fraction(1, 3)) and _is_int(v - Fraction(2, 3)):
        return SingularClass(Verdict.ICWL, 6, branch="Down")
    for cond, d in ((v, ADir.A1), (u, ADir.A2), (u - v, ADir.A12)):
        if _is_int(cond):
            return SingularClass(Verdict.IAL, 2, direction=d)
    for cond, d in ((u - 2 * v, WDir.W1), (2 * u - v, WDir.W2), (u + v, WDir.W21)):
        if _is_int(cond):
            return SingularClass(Verdict.IWL, 2, direction=d)
    return SingularClass(Verdict.GENERIC, 1)


def generic_to_depth(q: QadicParam) -> SingularClass:
    """The only verdict available for residue-form parameters."""
    return SingularClass(Verdict.GENERIC, 1, depth=q.depth)


def nonorientable_point(q: QadicParam) -> PPoint | None:
    """The unique point of P without orientation, if q is of ICwL type."""
    if not q.is_exact:
        raise NotExact("need an exact parameter")
    cls = classify(q)
    if cls.verdict is not Verdict.ICWL:
        return None
    u, v = q.u.exact, q.v.exact
    if cls.branch == "Up":
        # q + w1 + s2 + 2 s1 = w1 + (u - 2/3) a1 + (v - 1/3) a2
        shift = QPoint(int(u - Fraction(2, 3)), int(v - Fraction(1, 3)))
        return PPoint(1, 0) + shift.to_ppoint()
    shift = QPoint(int(u - Fraction(1, 3)), int(v - Fraction(2, 3)))
    return PPoint(0, 1) + shift.to_ppoint()
