"""Level queries on the nested triangulation built from a parameter q.

Everything is computed from d = x - c_K, where c_K = residue(q, K).  A
valuation that reaches K is reported as ``AtLeast(K)``; nothing beyond the
truncation depth is ever guessed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from . import _kernels as kern
from .lattice import A_UNIT, INF, ADir, PPoint, QPoint, WDir, coset_of, val2, Coset
from .qadic import QadicParam


class PrecisionExceeded(ValueError):
    pass


class NotACentroid(ValueError):
    pass


class Ambiguous(ValueError):
    pass


class Level(NamedTuple):
    value: int
    at_least: bool = False

    @property
    def finite(self) -> bool:
        return not self.at_least

    def __repr__(self):
        return f"AtLeast({self.value})" if self.at_least else f"Finite({self.value})"


def finite(k: int) -> Level:
    return Level(k, False)


def at_least(k: int) -> Level:
    return Level(k, True)


class Side(enum.IntEnum):
    """Side of a stripe relative to its direction frame.

    The frame normal of a stripe is w2 for A1, -w1 for A2 and w1 - w2 for
    A12 (each the 2pi/3 turn of the previous one).
    """

    MINUS = 0
    PLUS = 1


class Orientation(NamedTuple):
    kind: str  # "Up", "Down" or "Unknown"
    level: int  # largest k with the point in S_k; for Unknown, the depth K


class Edge(NamedTuple):
    v0: QPoint
    v1: QPoint
    level: int
    direction: ADir
    at_vertex: bool = False


class Shift(NamedTuple):
    side: Side
    centroid: PPoint
    orientation: Orientation


# frame normal of each stripe direction, in w-coordinates
FRAME_NORMAL = {ADir.A1: PPoint(0, 1), ADir.A2: PPoint(-1, 0), ADir.A12: PPoint(1, -1)}
# (PLUS candidate, MINUS candidate) centroid offsets for a unit edge starting at v0
_CANDIDATES = {
    ADir.A1: (PPoint(1, 0), PPoint(1, -1)),
    ADir.A2: (PPoint(-1, 1), PPoint(0, 1)),
    ADir.A12: (PPoint(1, 0), PPoint(0, 1)),
}


def default_depth(radius: int) -> int:
    return max(2, math.ceil(math.log2(max(radius, 1))) + 4)


def _exact_depth_bound(q: QadicParam, radius: int) -> int:
    """Depth beyond which any valuation seen in the ball is that of zero."""
    u, v = q.u.exact, q.v.exact
    den = u.denominator * v.denominator // math.gcd(u.denominator, v.denominator)
    bound = 8 * (radius + 2) * den + 6 * (abs(u.numerator) * (den // u.denominator)
                                          + abs(v.numerator) * (den // v.denominator))
    return bound.bit_length() + 4


@dataclass(frozen=True)
class TriContext:
    q: QadicParam
    K: int
    cK: QPoint = field(init=False)

    def __post_init__(self):
        if self.K < 2:
            raise ValueError("depth K must be at least 2")
        if self.K > self.q.depth:
            raise PrecisionExceeded(f"q known to depth {self.q.depth} < K={self.K}")
        if self.K > kern.INT_LIMIT_BITS - 4:
            raise OverflowError(f"K={self.K} exceeds the 64-bit kernel range")
        object.__setattr__(self, "cK", self.q.residue(self.K))

    @classmethod
    def for_radius(cls, q: QadicParam, radius: int, K: int | None = None) -> "TriContext":
        """Depth policy: default for residues (capped at their depth); exact
        parameters get enough depth that capped valuations mean exact zeros."""
        if q.is_exact:
            need = _exact_depth_bound(q, radius)
            return cls(q, max(K or default_depth(radius), need))
        k = K if K is not None else min(default_depth(radius), int(q.depth))
        return cls(q, k)

    # -- helpers ---------------------------------------------------------------

    def d(self, x: QPoint) -> tuple[int, int]:
        return x.m - self.cK.m, x.n - self.cK.n

    def cap(self, z: int) -> Level:
        v = val2(z)
        if v is INF or v >= self.K:
            return at_least(self.K)
        return finite(v)

    def exact_offset(self, x: QPoint) -> tuple[Fraction, Fraction] | None:
        """x - q in a-coordinates when q is exact."""
        if not self.q.is_exact:
            return None
        return x.m - self.q.u.exact, x.n - self.q.v.exact

    def a_line_infinite(self, x: QPoint, direction: ADir) -> bool:
        off = self.exact_offset(x)
        if off is None:
            return False
        d1, d2 = off
        return {ADir.A1: d2, ADir.A2: d1, ADir.A12: d1 - d2}[direction] == 0

    def w_line_infinite(self, x: QPoint, direction: WDir) -> bool:
        off = self.exact_offset(x)
        if off is None:
            return False
        d1, d2 = off
        return {WDir.W1: d1 - 2 * d2, WDir.W2: d2 - 2 * d1, WDir.W21: d1 + d2}[direction] == 0

    def point_nonorientable(self, p: PPoint) -> bool:
        if not self.q.is_exact:
            return False
        # p - q in w-coordinates: u a1 + v a2 = (2u - v) w1 + (-u + 2v) w2
        u, v = self.q.u.exact, self.q.v.exact
        return p.p == 2 * u - v and p.q == -u + 2 * v


# -- scalar queries ---------------------------------------------------------------

def vertex_level(ctx: TriContext, x: QPoint) -> Level:
    d1, d2 = ctx.d(x)
    return min(ctx.cap(d1), ctx.cap(d2))


def a_line_level(ctx: TriContext, x: QPoint, direction: ADir) -> Level:
    d1, d2 = ctx.d(x)
    return ctx.cap({ADir.A1: d2, ADir.A2: d1, ADir.A12: d1 - d2}[direction])


def w_line_level(ctx: TriContext, x: QPoint, direction: WDir) -> Level:
    d1, d2 = ctx.d(x)
    return ctx.cap({WDir.W1: d1 - 2 * d2, WDir.W2: d2 - 2 * d1, WDir.W21: d1 + d2}[direction])


def centroid_orientation(ctx: TriContext, p: PPoint) -> Orientation:
    if coset_of(p) is Coset.Q:
        raise NotACentroid(f"{p} lies in Q")
    c = ctx.cK.to_ppoint()
    e1, e2 = p.p - c.p, p.q - c.q
    mu = min(ctx.cap(e1), ctx.cap(e2))
    if mu.at_least:
        return Orientation("Unknown", ctx.K)
    # p is the centroid of a level-mu triangle and of none above it;
    # dividing by 2 swaps the two non-trivial classes mod 3
    cls = ((e1 - e2) >> mu.value) % 3
    return Orientation("Up" if cls == 1 else "Down", mu.value + 1)


def edge_through(ctx: TriContext, x: QPoint, direction: ADir) -> Edge:
    level = a_line_level(ctx, x, direction)
    if level.at_least or level.value + 2 > ctx.K:
        raise PrecisionExceeded(f"line level {level} too deep for K={ctx.K}")
    L = level.value
    d1, d2 = ctx.d(x)
    along = d2 if direction is ADir.A2 else d1
    t0 = -(along % (1 << L))
    unit = A_UNIT[direction]
    v0 = x + unit * t0
    return Edge(v0, v0 + unit * (1 << L), L, direction, at_vertex=(t0 == 0))


def shift_candidates(edge: Edge) -> tuple[PPoint, PPoint]:
    """Centroids of the two level-L triangles on either side of the edge."""
    base = edge.v0.to_ppoint()
    plus, minus = _CANDIDATES[edge.direction]
    scale = 1 << edge.level
    return base + plus * scale, base + minus * scale


def governing_shift(ctx: TriContext, edge: Edge) -> Shift:
    """Side toward the centroid of the level-(L+1) triangle containing the edge."""
    if edge.level + 2 > ctx.K:
        raise PrecisionExceeded(f"edge level {edge.level} needs K >= {edge.level + 2}")
    plus, minus = shift_candidates(edge)
    op, om = centroid_orientation(ctx, plus), centroid_orientation(ctx, minus)
    need = edge.level + 2

    def governs(o: Orientation) -> bool:
        return o.kind == "Unknown" or o.level >= need

    gp, gm = governs(op), governs(om)
    if gp == gm:
        raise Ambiguous(f"edge {edge}: candidate orientations {op}, {om}")
    return Shift(Side.PLUS, plus, op) if gp else Shift(Side.MINUS, minus, om)


# -- bulk queries -----------------------------------------------------------------

def bulk_d(ctx: TriContext, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pts = np.asarray(pts, dtype=np.int64)
    kern.check_magnitude(pts)
    return pts[:, 0] - ctx.cK.m, pts[:, 1] - ctx.cK.n


def bulk_line_levels(ctx: TriContext, pts: np.ndarray) -> np.ndarray:
    """(N, 3) capped levels of the A1, A2, A12 lines through each point."""
    d1, d2 = bulk_d(ctx, pts)
    K = ctx.K
    return np.stack(
        [kern.val2_capped(d2, K), kern.val2_capped(d1, K), kern.val2_capped(d1 - d2, K)], axis=1
    )


def bulk_w_levels(ctx: TriContext, pts: np.ndarray) -> np.ndarray:
    """(N, 3) capped levels of the W1, W2, W21 lines through each point."""
    d1, d2 = bulk_d(ctx, pts)
    K = ctx.K
    return np.stack(
        [
            kern.val2_capped(d1 - 2 * d2, K),
            kern.val2_capped(d2 - 2 * d1, K),
            kern.val2_capped(d1 + d2, K),
        ],
        axis=1,
    )


def stripe_from_levels(levels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Direction index of the unique maximal level (-1 if tied) and that level."""
    order = np.argsort(-levels, axis=1, kind="stable")
    idx = np.arange(levels.shape[0])
    top = levels[idx, order[:, 0]]
    second = levels[idx, order[:, 1]]
    stripe = np.where(top > second, order[:, 0], -1).astype(np.int64)
    return stripe, top


_CAND_ARRAY = np.array(
    [[_CANDIDATES[d][0].p, _CANDIDATES[d][0].q, _CANDIDATES[d][1].p, _CANDIDATES[d][1].q]
     for d in ADir],
    dtype=np.int64,
)


def bulk_shift(ctx: TriContext, pts: np.ndarray, stripe: np.ndarray, level: np.ndarray) -> np.ndarray:
    """Geometric shift side per point (1 PLUS, 0 MINUS, -1 unresolved)."""
    pts = np.asarray(pts, dtype=np.int64)
    out = np.full(len(pts), -1, dtype=np.int64)
    ok = (stripe >= 0) & (level + 2 <= ctx.K)
    if not ok.any():
        return out
    sel = np.nonzero(ok)[0]
    s = stripe[sel]
    L = level[sel]
    d1, d2 = bulk_d(ctx, pts[sel])
    along = np.where(s == ADir.A2, d2, d1)
    t0 = -np.mod(along, np.left_shift(1, L))
    unit_m = np.where(s == ADir.A2, 0, 1)
    unit_n = np.where(s == ADir.A1, 0, 1)
    v0m = d1 + t0 * unit_m  # v0 - c_K, a-coordinates
    v0n = d2 + t0 * unit_n
    # to w-coordinates
    bp, bq = 2 * v0m - v0n, -v0m + 2 * v0n
    cand = _CAND_ARRAY[s]
    scale = np.left_shift(1, L)
    K = ctx.K
    mu_plus = np.minimum(
        kern.val2_capped(bp + cand[:, 0] * scale, K), kern.val2_capped(bq + cand[:, 1] * scale, K)
    )
    mu_minus = np.minimum(
        kern.val2_capped(bp + cand[:, 2] * scale, K), kern.val2_capped(bq + cand[:, 3] * scale, K)
    )
    gp = mu_plus >= L + 1
    gm = mu_minus >= L + 1
    res = np.where(gp & ~gm, 1, np.where(gm & ~gp, 0, -1))
    out[sel] = res
    return out


def bulk_orientation(ctx: TriContext, ppts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orientation of P-points given in w-coordinates.

    Returns (kind, level): kind 1 Up, 2 Down, 0 Unknown, -1 point of Q.
    """
    ppts = np.asarray(ppts, dtype=np.int64)
    kern.check_magnitude(ppts)
    c = ctx.cK.to_ppoint()
    e1, e2 = ppts[:, 0] - c.p, ppts[:, 1] - c.q
    K = ctx.K
    mu = np.minimum(kern.val2_capped(e1, K), kern.val2_capped(e2, K))
    in_q = np.mod(ppts[:, 0] - ppts[:, 1], 3) == 0
    safe = np.minimum(mu, 62)
    cls = np.mod(np.right_shift(e1 - e2, safe), 3)
    kind = np.where(mu >= K, 0, cls)
    kind = np.where(in_q, -1, kind)
    return kind.astype(np.int64), np.where(mu >= K, K, mu + 1).astype(np.int64)
