"""Tile marks: stripe direction, stripe shift, split colouring and parity.

Two independent routes produce the marks.  The closed-form route reads them
off the triple coordinates of x - c_K.  The geometric route finds the stripe
from line levels, the shift from the governing triangle, and the colouring
by propagating rule R2 along w-lines.
"""

from __future__ import annotations

import io
import os
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterator, NamedTuple, TextIO

import numpy as np

from . import _kernels as kern
from .lattice import ADir, PPoint, QPoint, WDir, W_STEP, gram6, hex_ball_array
from .qadic import QadicParam, SingularClass, Verdict, classify, format_qspec, parse_qspec
from .triangulation import (
    FRAME_NORMAL,
    PrecisionExceeded,
    Side,
    TriContext,
    bulk_d,
    bulk_line_levels,
    bulk_shift,
    bulk_w_levels,
    stripe_from_levels,
)
from .verify import (
    RED,
    BLUE,
    RED_DIR,
    SPLIT_DIR,
    SPLIT_SIGN,
    ColoringContradiction,
    end_terms,
    solve_split_bits,
)

DETERMINED, PRECISION, FREE = 0, 1, 2
REASONS = {PRECISION: "precision", FREE: "free"}
_REASON_CODES = {v: k for k, v in REASONS.items()}


class OnUndeterminedLine(ValueError):
    """The stripe lies on an infinite-level a-line; its shift is a free choice."""


class OnUncoloredLine(ValueError):
    """The split diameter lies on an infinite-level w-line; its colouring is free."""


class NoUniqueStripe(ValueError):
    """No unique top-level a-line passes through the tile."""


class FreeBitsRequired(ValueError):
    pass


class FreeBitsError(ValueError):
    pass


class PathDisagreement(RuntimeError):
    pass


# ------------------------------------------------------------------ free bits

def parse_freebits(spec: str | None) -> tuple[int, ...] | None:
    if spec is None or spec.strip() in ("", "-"):
        return None
    try:
        return tuple(int(tok) for tok in spec.split(","))
    except ValueError as exc:
        raise FreeBitsError(f"malformed free bits {spec!r}") from exc


def format_freebits(bits: tuple[int, ...] | None) -> str:
    return "-" if bits is None else ",".join(str(b) for b in bits)


def freebit_count(sing: SingularClass | None) -> int:
    """Number of free-bit values a completion needs (a CHT choice counts as one)."""
    if sing is None or sing.verdict is Verdict.GENERIC:
        return 0
    return {Verdict.CHT: 1, Verdict.IAL: 1, Verdict.IWL: 1, Verdict.ICWL: 3}[sing.verdict]


def validate_freebits(sing: SingularClass | None, bits: tuple[int, ...] | None) -> None:
    if bits is None:
        return
    need = freebit_count(sing)
    if need == 0:
        raise FreeBitsError("free bits given for a parameter without free structure")
    if len(bits) != need:
        raise FreeBitsError(f"{sing.verdict.value} needs {need} free bit value(s), got {len(bits)}")
    top = 12 if sing.verdict is Verdict.CHT else 2
    if any(not 0 <= b < top for b in bits):
        raise FreeBitsError(f"free bit values must lie in [0, {top})")


def free_lines(q: QadicParam) -> list[tuple[WDir, int]]:
    """Infinite-level w-lines whose colouring is a free choice, as (direction, key).

    The key of a point is m - 2n (W1), n - 2m (W2) or m + n (W21).
    """
    if not q.is_exact:
        return []
    sing = classify(q)
    u, v = q.u.exact, q.v.exact
    keys = {WDir.W1: u - 2 * v, WDir.W2: v - 2 * u, WDir.W21: u + v}
    if sing.verdict is Verdict.IWL:
        return [(sing.direction, int(keys[sing.direction]))]
    if sing.verdict is Verdict.ICWL:
        return [(w, int(keys[w])) for w in WDir]
    return []


def line_key(pts: np.ndarray, w: WDir) -> np.ndarray:
    m, n = pts[:, 0], pts[:, 1]
    return {WDir.W1: m - 2 * n, WDir.W2: n - 2 * m, WDir.W21: m + n}[w]


def line_position(pts: np.ndarray, w: WDir) -> np.ndarray:
    """Coordinate advancing by one per step 3w along the line."""
    return pts[:, 1] if w in (WDir.W1, WDir.W21) else pts[:, 0]


# ------------------------------------------------------------------ marks

class Marks(NamedTuple):
    stripe: np.ndarray
    shift: np.ndarray
    split: np.ndarray
    parity: np.ndarray
    status: np.ndarray


@dataclass(frozen=True)
class TileMark:
    center: QPoint
    stripe: ADir | None
    shift: Side | None
    split: int | None
    parity: int | None
    status: str  # "Determined" or the reason it is not

    @property
    def determined(self) -> bool:
        return self.status == "Determined"


def _mark_at(marks: Marks, pts: np.ndarray, i: int) -> TileMark:
    s, sh, sp, pa, st = (int(a[i]) for a in marks)
    return TileMark(
        QPoint(int(pts[i, 0]), int(pts[i, 1])),
        ADir(s) if s >= 0 else None,
        Side(sh) if sh >= 0 else None,
        sp if sp >= 0 else None,
        pa if pa >= 0 else None,
        "Determined" if st == DETERMINED else REASONS[st],
    )


# ------------------------------------------------------------------ closed form

def formula_marks(ctx: TriContext, pts: np.ndarray) -> Marks:
    """Marks from the triple coordinates t of x - c_K.

    With j the index of the component of t with the most factors of two:
    stripe j, shift bit of t_{j+2} at position v(t_j), split bit of t_{j+2}
    at position v(t_{j+2} - t_{j+1}).
    """
    pts = np.asarray(pts, dtype=np.int64).reshape(-1, 2)
    d1, d2 = bulk_d(ctx, pts)
    j, shift, color, flags = kern.parity_formula(d2, -d1, d1 - d2, ctx.K)
    no_max = (flags & kern.NO_UNIQUE_MAX) != 0
    shift_bad = no_max | ((flags & kern.SHIFT_UNRESOLVED) != 0)
    color_bad = no_max | ((flags & kern.COLOR_UNRESOLVED) != 0)
    stripe = np.where(no_max, -1, j)
    shift = np.where(shift_bad, -1, shift)
    split = np.where(color_bad, -1, color)
    ok = ~(shift_bad | color_bad)
    parity = np.where(ok, shift ^ split, -1)
    unresolved = FREE if ctx.q.is_exact else PRECISION
    status = np.where(ok, DETERMINED, unresolved)
    return Marks(stripe, shift, split, parity, status.astype(np.int64))


def _formula_single(ctx: TriContext, x: QPoint) -> tuple[int, int, int, int]:
    d1, d2 = ctx.d(x)
    j, shift, color, flags = kern.parity_formula([d2], [-d1], [d1 - d2], ctx.K)
    return int(j[0]), int(shift[0]), int(color[0]), int(flags[0])


def stripe_dir(ctx: TriContext, x: QPoint) -> ADir:
    j, _, _, flags = _formula_single(ctx, x)
    if flags & kern.NO_UNIQUE_MAX:
        raise NoUniqueStripe(f"no unique top-level line through {x} at depth {ctx.K}")
    return ADir(j)


def shift_bit_formula(ctx: TriContext, x: QPoint) -> int:
    j = stripe_dir(ctx, x)
    _, shift, _, flags = _formula_single(ctx, x)
    if flags & kern.SHIFT_UNRESOLVED:
        if ctx.a_line_infinite(x, j):
            raise OnUndeterminedLine(f"stripe of {x} lies on an infinite {j.name} line")
        raise PrecisionExceeded(f"shift bit of {x} needs depth beyond K={ctx.K}")
    return shift


def color_bit_formula(ctx: TriContext, x: QPoint) -> int:
    j = stripe_dir(ctx, x)
    _, _, color, flags = _formula_single(ctx, x)
    if flags & kern.COLOR_UNRESOLVED:
        w = WDir(int(SPLIT_DIR[j]))
        if ctx.w_line_infinite(x, w):
            raise OnUncoloredLine(f"split diameter of {x} lies on an infinite {w.name} line")
        raise PrecisionExceeded(f"colour bit of {x} needs depth beyond K={ctx.K}")
    return color


def parity(ctx: TriContext, x: QPoint) -> int:
    """1 for white (stripe displaced toward the red end of the split diameter)."""
    return shift_bit_formula(ctx, x) ^ color_bit_formula(ctx, x)


# ------------------------------------------------------------------ geometric route

def _w_coords(da: np.ndarray, db: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return 2 * da - db, -da + 2 * db


def _cht_ray_shift(rho_p, rho_q, center_dir: ADir, center_shift: int, ray_dir: np.ndarray) -> np.ndarray:
    """Shift of stripes on the rays of a completed CHT.

    Rays continuing the centre stripe inherit its shift; the others are
    displaced toward the side of the centre stripe line they lie on, measured
    against that ray's own frame.
    """
    nc = FRAME_NORMAL[center_dir]
    normals = np.array([[FRAME_NORMAL[d].p, FRAME_NORMAL[d].q] for d in ADir], dtype=np.int64)
    nr = normals[ray_dir]
    side = 2 * rho_p * nc.p + 2 * rho_q * nc.q + rho_p * nc.q + rho_q * nc.p
    frame = 2 * nc.p * nr[:, 0] + 2 * nc.q * nr[:, 1] + nc.p * nr[:, 1] + nc.q * nr[:, 0]
    out = (side * frame > 0).astype(np.int64)
    return np.where(ray_dir == center_dir, center_shift, out)


def _line_anchors(ctx: TriContext, pts: np.ndarray, stripe: np.ndarray, wlev: np.ndarray):
    """Pin the far ends of every w-line segment to the nearest full tile beyond it.

    Along a w-line of level l the tiles whose split diameter lies on the line
    are exactly those with v(e) < l, where e is the line position relative to
    c_K; between two full tiles the end colour is carried unchanged, so the
    segment end x only interacts with the next full tile F, which is at most
    2^l steps away.
    """
    n = len(pts)
    K = ctx.K
    idx_parts, bit_parts, site_parts = [], [], []
    c_pos = {WDir.W1: ctx.cK.n, WDir.W2: ctx.cK.m, WDir.W21: ctx.cK.n}
    for w in WDir:
        key = line_key(pts, w)
        pos = line_position(pts, w)
        order = np.lexsort((pos, key))
        ks = key[order]
        first = np.r_[True, ks[1:] != ks[:-1]]
        last = np.r_[ks[1:] != ks[:-1], True]
        step = np.array([W_STEP[w].m, W_STEP[w].n], dtype=np.int64)
        for ends, sign in ((order[last], +1), (order[first], -1)):
            lev = wlev[ends, w]
            ends = ends[(lev < K) & (stripe[ends] >= 0)]
            if len(ends) == 0:
                continue
            lev = wlev[ends, w]
            e = pos[ends] - c_pos[w]
            period = np.left_shift(1, lev)
            k = np.mod(-sign * e, period)
            k = np.where(k == 0, period, k)
            far = pts[ends] + sign * k[:, None] * step
            kern.check_magnitude(far)
            far_stripe, _ = stripe_from_levels(bulk_line_levels(ctx, far))
            if (far_stripe < 0).any() or (SPLIT_DIR[far_stripe] == w).any():
                raise RuntimeError("line anchor did not land on a full tile")
            _, far_col = end_terms(far_stripe, w, -sign)
            is_var, off = end_terms(stripe[ends], w, sign)
            idx_parts.append(np.where(is_var, ends, n))
            bit_parts.append(1 ^ off ^ far_col)
            site_parts.append(ends)
    if not idx_parts:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, empty
    return np.concatenate(idx_parts), np.concatenate(bit_parts), np.concatenate(site_parts)


def geometric_marks(ctx: TriContext, pts: np.ndarray, freebits: tuple[int, ...] | None = None) -> Marks:
    pts = np.asarray(pts, dtype=np.int64).reshape(-1, 2)
    n = len(pts)
    K = ctx.K
    q = ctx.q
    sing = classify(q) if q.is_exact else None
    validate_freebits(sing, freebits)
    unresolved = FREE if q.is_exact else PRECISION

    levels = bulk_line_levels(ctx, pts)
    stripe, top = stripe_from_levels(levels)
    shift = bulk_shift(ctx, pts, stripe, top)
    anchor_idx: list[np.ndarray] = []
    anchor_bit: list[np.ndarray] = []

    if sing is not None and freebits is not None:
        u, v = q.u.exact, q.v.exact
        if sing.verdict is Verdict.CHT:
            choice = freebits[0]
            c_dir, c_shift, c_split = ADir(choice // 4), (choice // 2) % 2, choice % 2
            rm, rn = pts[:, 0] - int(u), pts[:, 1] - int(v)
            center = (rm == 0) & (rn == 0)
            on_ray = ~center & ((rm == 0) | (rn == 0) | (rm == rn))
            ray_dir = np.where(rn == 0, ADir.A1, np.where(rm == 0, ADir.A2, ADir.A12))
            rho_p, rho_q = _w_coords(rm, rn)
            ray_shift = _cht_ray_shift(rho_p, rho_q, c_dir, c_shift, ray_dir)
            shift = np.where(on_ray, ray_shift, shift)
            stripe = np.where(center, int(c_dir), stripe)
            shift = np.where(center, c_shift, shift)
            ci = np.nonzero(center)[0]
            anchor_idx.append(ci)
            anchor_bit.append(np.full(len(ci), c_split))
        elif sing.verdict is Verdict.IAL:
            m, nn = pts[:, 0], pts[:, 1]
            on_line = {
                ADir.A1: lambda: nn == int(v),
                ADir.A2: lambda: m == int(u),
                ADir.A12: lambda: m - nn == int(u - v),
            }[sing.direction]()
            shift = np.where(on_line, freebits[0], shift)
        else:
            for (w, key), b in zip(free_lines(q), freebits):
                on = (line_key(pts, w) == key) & (stripe >= 0)
                on &= SPLIT_DIR[np.maximum(stripe, 0)] == w
                sel = np.nonzero(on)[0]
                # b is the colour at the end in the +w direction
                anchor_idx.append(sel)
                anchor_bit.append(b ^ (SPLIT_SIGN[stripe[sel]] == -1).astype(np.int64))

    wlev = bulk_w_levels(ctx, pts)
    li, lb, ls = _line_anchors(ctx, pts, stripe, wlev)
    idx = np.concatenate(anchor_idx + [li]).astype(np.int64)
    bit = np.concatenate(anchor_bit + [lb]).astype(np.int64)
    site = np.concatenate(anchor_idx + [ls]).astype(np.int64)
    sol = solve_split_bits(pts, stripe, idx, bit, site)
    if sol.conflict_site >= 0:
        s = sol.conflict_site
        raise ColoringContradiction(QPoint(int(pts[s, 0]), int(pts[s, 1])))
    split = sol.bits

    stripe = stripe.astype(np.int64)
    shift = np.where(stripe >= 0, shift, -1)
    ok = (stripe >= 0) & (shift >= 0) & (split >= 0)
    parity = np.where(ok, shift ^ split, -1)
    status = np.where(ok, DETERMINED, unresolved).astype(np.int64)
    return Marks(stripe, shift, split, parity, status)


def tile_mark_geometric(ctx: TriContext, x: QPoint, freebits: tuple[int, ...] | None = None) -> TileMark:
    """Marks of one tile; the colouring is solved on the ball of radius 2 around it."""
    pts = hex_ball_array(2, x)
    marks = geometric_marks(ctx, pts, freebits)
    i = int(np.nonzero((pts[:, 0] == x.m) & (pts[:, 1] == x.n))[0][0])
    mark = _mark_at(marks, pts, i)
    if mark.status == "free":
        raise FreeBitsRequired(f"tile {x} depends on a free choice; supply free bits")
    if mark.status == "precision":
        raise PrecisionExceeded(f"tile {x} needs depth beyond K={ctx.K}")
    return mark


# ------------------------------------------------------------------ patches

PATCH_MAGIC = "#hexlimit-patch v1"
_HEADER = re.compile(r"^#q=(\S+) K=(\d+) R=(\d+) freebits=(\S+)$")
_FIELD_NAMES = {"A1": 0, "A2": 1, "A12": 2, "PLUS": 1, "MINUS": 0}


@dataclass
class Patch:
    points: np.ndarray
    stripe: np.ndarray
    shift: np.ndarray
    split: np.ndarray
    parity: np.ndarray
    status: np.ndarray
    qspec: str
    K: int
    R: int
    freebits: str = "-"
    parity_only: bool = False
    _lookup: dict = field(default=None, init=False, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def marks(self) -> Marks:
        return Marks(self.stripe, self.shift, self.split, self.parity, self.status)

    @property
    def determined(self) -> np.ndarray:
        return self.status == DETERMINED

    def index_of(self, x: QPoint) -> int:
        if self._lookup is None:
            self._lookup = {(int(m), int(n)): i for i, (m, n) in enumerate(self.points)}
        return self._lookup[(x.m, x.n)]

    def tile(self, x: QPoint) -> TileMark:
        return _mark_at(self.marks, self.points, self.index_of(x))

    def tiles(self) -> Iterator[TileMark]:
        for i in range(len(self)):
            yield _mark_at(self.marks, self.points, i)

    def parity_map(self) -> dict[QPoint, int]:
        return {
            QPoint(int(m), int(n)): int(p)
            for (m, n), p, s in zip(self.points, self.parity, self.status)
            if s == DETERMINED
        }

    # -- text format ------------------------------------------------------------

    def dumps(self) -> str:
        buf = io.StringIO()
        self.write(buf)
        return buf.getvalue()

    def write(self, dest: str | os.PathLike | TextIO) -> None:
        if isinstance(dest, (str, os.PathLike)):
            with open(dest, "w", encoding="ascii") as fh:
                self.write(fh)
            return
        dest.write(PATCH_MAGIC + "\n")
        dest.write(f"#q={self.qspec} K={self.K} R={self.R} freebits={self.freebits}\n")
        for i in range(len(self)):
            m, n = int(self.points[i, 0]), int(self.points[i, 1])
            par = "." if self.parity[i] < 0 else str(int(self.parity[i]))
            if self.parity_only:
                dest.write(f"{m}\t{n}\t{par}\n")
                continue
            st = "." if self.stripe[i] < 0 else ADir(int(self.stripe[i])).name
            sh = "." if self.shift[i] < 0 else Side(int(self.shift[i])).name
            sp = "." if self.split[i] < 0 else str(int(self.split[i]))
            status = "D" if self.status[i] == DETERMINED else f"U:{REASONS[int(self.status[i])]}"
            dest.write(f"{m}\t{n}\t{par}\t{st}\t{sh}\t{sp}\t{status}\n")

    @classmethod
    def loads(cls, text: str) -> "Patch":
        return cls.read(io.StringIO(text))

    @classmethod
    def read(cls, src: str | os.PathLike | TextIO) -> "Patch":
        if isinstance(src, (str, os.PathLike)):
            with open(src, encoding="ascii") as fh:
                return cls.read(fh)
        lines = [ln.strip() for ln in src if ln.strip()]
        if not lines or lines[0] != PATCH_MAGIC:
            raise ValueError("not a hexlimit patch file")
        header = _HEADER.match(lines[1]) if len(lines) > 1 else None
        if header is None:
            raise ValueError("malformed patch header")
        qspec, K, R, fb = header.group(1), int(header.group(2)), int(header.group(3)), header.group(4)
        rows = [ln.split() for ln in lines[2:] if not ln.startswith("#")]
        widths = {len(r) for r in rows}
        if not widths <= {3} and not widths <= {7}:
            raise ValueError("patch records must all have 3 or all have 7 fields")
        parity_only = widths == {3}

        def num(tok: str) -> int:
            return -1 if tok == "." else int(tok)

        def name(tok: str) -> int:
            return -1 if tok == "." else _FIELD_NAMES[tok]

        count = len(rows)
        pts = np.array([[int(r[0]), int(r[1])] for r in rows], dtype=np.int64).reshape(count, 2)
        par = np.array([num(r[2]) for r in rows], dtype=np.int64)
        if parity_only:
            unknown = np.full(count, -1, dtype=np.int64)
            status = np.where(par >= 0, DETERMINED, PRECISION).astype(np.int64)
            return cls(pts, unknown, unknown.copy(), unknown.copy(), par, status, qspec, K, R, fb, True)
        stripe = np.array([name(r[3]) for r in rows], dtype=np.int64)
        shift = np.array([name(r[4]) for r in rows], dtype=np.int64)
        split = np.array([num(r[5]) for r in rows], dtype=np.int64)
        status = np.array(
            [DETERMINED if r[6] == "D" else _REASON_CODES[r[6].split(":", 1)[1]] for r in rows],
            dtype=np.int64,
        )
        return cls(pts, stripe, shift, split, par, status, qspec, K, R, fb, False)

    def to_parity_only(self) -> "Patch":
        unknown = np.full(len(self), -1, dtype=np.int64)
        return Patch(self.points, unknown, unknown.copy(), unknown.copy(), self.parity, self.status,
                     self.qspec, self.K, self.R, self.freebits, True)


def generate_patch(
    q: QadicParam,
    radius: int,
    K: int | None = None,
    freebits: tuple[int, ...] | None = None,
    cross_check: bool = True,
) -> Patch:
    """Marks of every tile within hex distance ``radius`` of the origin.

    Both routes are evaluated; their parities must agree on every tile that
    both determine.
    """
    ctx = TriContext.for_radius(q, radius, K)
    pts = hex_ball_array(radius)
    geo = geometric_marks(ctx, pts, freebits)
    if cross_check:
        form = formula_marks(ctx, pts)
        both = (geo.status == DETERMINED) & (form.status == DETERMINED)
        bad = np.nonzero(both & (geo.parity != form.parity))[0]
        if len(bad):
            sites = ", ".join(f"({pts[i, 0]},{pts[i, 1]})" for i in bad[:5])
            raise PathDisagreement(f"closed-form and geometric parities differ at {sites}")
    return Patch(pts, *geo, qspec=format_qspec(q), K=ctx.K, R=radius,
                 freebits=format_freebits(freebits))
