"""Colour conventions, the parity union-find colouring solver, and the
matching-rule checkers.

Colour encoding: red = 0, blue = 1.  For a stripe in direction s the full
red diameter sits pi/6 clockwise of the stripe and the full blue one pi/6
counterclockwise; the remaining (split) diameter is perpendicular to the
stripe.  ``split`` = 0 means the end of the split diameter on the frame
normal side (see ``triangulation.FRAME_NORMAL``) is red.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from . import _kernels as kern
from .lattice import ADir, QPoint, WDir, W_STEP, hex_distance

RED, BLUE = 0, 1

# indexed by stripe code (ADir value)
SPLIT_DIR = np.array([WDir.W2, WDir.W1, WDir.W21], dtype=np.int64)
SPLIT_SIGN = np.array([1, -1, -1], dtype=np.int64)
RED_DIR = np.array([WDir.W21, WDir.W2, WDir.W1], dtype=np.int64)
BLUE_DIR = np.array([WDir.W1, WDir.W21, WDir.W2], dtype=np.int64)

_STEP = np.array([[W_STEP[w].m, W_STEP[w].n] for w in WDir], dtype=np.int64)
# unit vectors along W1, W2, W21 in w-coordinates
_W_UNIT_W = np.array([[1, 0], [0, 1], [-1, 1]], dtype=np.int64)


class ColoringContradiction(ValueError):
    def __init__(self, site: QPoint, detail: str = ""):
        super().__init__(f"contradiction at {site} {detail}".strip())
        self.site = site


# ------------------------------------------------------------------ point index

class PointIndex:
    """Vectorised lookup of lattice points in an (N, 2) array."""

    _OFF = 1 << 30

    def __init__(self, pts: np.ndarray):
        pts = np.asarray(pts, dtype=np.int64)
        if pts.size and np.abs(pts).max() >= self._OFF:
            raise OverflowError("point coordinates too large to index")
        self.keys = self._key(pts)
        self.order = np.argsort(self.keys, kind="stable")
        self.sorted = self.keys[self.order]

    @classmethod
    def _key(cls, pts: np.ndarray) -> np.ndarray:
        return (pts[:, 0] + cls._OFF) * (2 * cls._OFF) + (pts[:, 1] + cls._OFF)

    def lookup(self, pts: np.ndarray) -> np.ndarray:
        """Index of each query point, or -1."""
        pts = np.asarray(pts, dtype=np.int64).reshape(-1, 2)
        if len(self.sorted) == 0:
            return np.full(len(pts), -1, dtype=np.int64)
        keys = self._key(pts)
        pos = np.searchsorted(self.sorted, keys)
        pos = np.minimum(pos, len(self.sorted) - 1)
        hit = self.sorted[pos] == keys
        return np.where(hit, self.order[pos], -1)


# ------------------------------------------------------------------ diameter ends

def end_terms(stripe: np.ndarray, wdir: int, sign: int) -> tuple[np.ndarray, np.ndarray]:
    """Colour of the diameter end at x + sign * w_dir as (is_variable, offset).

    A variable end has colour split_bit xor offset; a constant end has colour
    offset.
    """
    stripe = np.asarray(stripe, dtype=np.int64)
    s = np.maximum(stripe, 0)
    is_var = SPLIT_DIR[s] == wdir
    var_off = np.where(SPLIT_SIGN[s] == sign, 0, 1)
    const = np.where(RED_DIR[s] == wdir, RED, BLUE)
    return is_var, np.where(is_var, var_off, const)


def end_colors(stripe: np.ndarray, split: np.ndarray, wdir: int, sign: int) -> np.ndarray:
    """Concrete end colours (-1 where stripe or needed split bit is unknown)."""
    is_var, off = end_terms(stripe, wdir, sign)
    split = np.asarray(split, dtype=np.int64)
    col = np.where(is_var, np.bitwise_xor(np.maximum(split, 0), off), off)
    unknown = (np.asarray(stripe) < 0) | (is_var & (split < 0))
    return np.where(unknown, -1, col)


# ------------------------------------------------------------------ solver

@dataclass
class SplitSolution:
    bits: np.ndarray  # -1 where not forced
    root: np.ndarray
    conflict_site: int  # point index of first contradiction, or -1


def r2_pairs(index: PointIndex, pts: np.ndarray, wdir: int) -> tuple[np.ndarray, np.ndarray]:
    """Pairs (i, j) of consecutive centres x, x + 3w along w-lines."""
    j = index.lookup(pts + _STEP[wdir])
    i = np.nonzero(j >= 0)[0]
    return i, j[i]


def solve_split_bits(
    pts: np.ndarray,
    stripe: np.ndarray,
    anchor_idx: np.ndarray | None = None,
    anchor_bit: np.ndarray | None = None,
    anchor_site: np.ndarray | None = None,
) -> SplitSolution:
    """Force split bits from rule R2 along all w-lines.

    Anchors say split[anchor_idx] == anchor_bit; an anchor index equal to
    len(pts) refers to the constant node and asserts anchor_bit == 0.
    ``anchor_site`` names the point reported if an anchor is contradicted.
    """
    pts = np.asarray(pts, dtype=np.int64).reshape(-1, 2)
    stripe = np.asarray(stripe, dtype=np.int64)
    n = len(pts)
    const = n
    index = PointIndex(pts)
    a_parts, b_parts, r_parts, site_parts = [], [], [], []
    for w in WDir:
        i, j = r2_pairs(index, pts, w)
        known = (stripe[i] >= 0) & (stripe[j] >= 0)
        i, j = i[known], j[known]
        vi, oi = end_terms(stripe[i], w, +1)
        vj, oj = end_terms(stripe[j], w, -1)
        a_parts.append(np.where(vi, i, const))
        b_parts.append(np.where(vj, j, const))
        r_parts.append(1 ^ oi ^ oj)
        site_parts.append(i)
    if anchor_idx is not None and len(anchor_idx):
        idx = np.asarray(anchor_idx, dtype=np.int64)
        a_parts.append(idx)
        b_parts.append(np.full(len(idx), const, dtype=np.int64))
        r_parts.append(np.asarray(anchor_bit, dtype=np.int64))
        site_parts.append(idx if anchor_site is None else np.asarray(anchor_site, dtype=np.int64))
    a = np.concatenate(a_parts)
    b = np.concatenate(b_parts)
    rel = np.concatenate(r_parts)
    sites = np.concatenate(site_parts)
    root, parity, conflict = kern.uf_solve(n + 1, a, b, rel)
    forced = root[:n] == root[const]
    bits = np.where(forced, parity[:n] ^ parity[const], -1)
    bits = np.where(stripe >= 0, bits, -1)
    site = int(sites[conflict]) if conflict >= 0 else -1
    return SplitSolution(bits.astype(np.int64), root[:n], site)


@dataclass
class SolveResult:
    forced: dict[QPoint, int]
    free_components: list[list[QPoint]] = field(default_factory=list)


def solve_coloring(stripes: Mapping[QPoint, tuple[ADir, object]]) -> SolveResult:
    """Split bits forced by R2 given stripe directions (shift is not needed).

    Raises ColoringContradiction when the constraints are inconsistent.
    Components not reaching a full diameter are returned as free.
    """
    keys = sorted(stripes)
    pts = np.array([[x.m, x.n] for x in keys], dtype=np.int64).reshape(-1, 2)
    stripe = np.array([int(stripes[x][0]) for x in keys], dtype=np.int64)
    sol = solve_split_bits(pts, stripe)
    if sol.conflict_site >= 0:
        raise ColoringContradiction(keys[sol.conflict_site])
    forced = {x: int(b) for x, b in zip(keys, sol.bits) if b >= 0}
    groups: dict[int, list[QPoint]] = {}
    for x, b, r in zip(keys, sol.bits, sol.root):
        if b < 0:
            groups.setdefault(int(r), []).append(x)
    return SolveResult(forced, [sorted(g) for _, g in sorted(groups.items())])


# ------------------------------------------------------------------ checkers

@dataclass(frozen=True)
class Violation:
    kind: str  # R1, R2, ThreeColor, Prototile, Periodicity
    m: int
    n: int
    detail: str = ""

    def line(self) -> str:
        return f"{self.kind}\t{self.m}\t{self.n}\t{self.detail}"


@dataclass
class CheckReport:
    violations: list[Violation] = field(default_factory=list)
    skipped: int = 0
    flagged: list[Violation] = field(default_factory=list)

    def __bool__(self) -> bool:
        return not self.violations

    def __len__(self) -> int:
        return len(self.violations)


def _interior_mask(pts: np.ndarray, radius: int, margin: int) -> np.ndarray:
    dist = np.maximum(np.maximum(np.abs(pts[:, 0]), np.abs(pts[:, 1])), np.abs(pts[:, 0] - pts[:, 1]))
    return dist <= radius - margin


def check_r2(patch) -> CheckReport:
    """Consecutive centres x, x + 3w must show opposite colours across the gap."""
    pts = patch.points
    index = PointIndex(pts)
    rep = CheckReport()
    for w in WDir:
        i, j = r2_pairs(index, pts, w)
        ci = end_colors(patch.stripe[i], patch.split[i], w, +1)
        cj = end_colors(patch.stripe[j], patch.split[j], w, -1)
        known = (ci >= 0) & (cj >= 0)
        rep.skipped += int((~known).sum())
        bad = known & (ci == cj)
        for a, b in zip(i[bad], j[bad]):
            rep.violations.append(
                Violation("R2", int(pts[a, 0]), int(pts[a, 1]),
                          f"{WDir(w).name} to ({pts[b, 0]},{pts[b, 1]})")
            )
    return rep


def check_r1(patch) -> CheckReport:
    """Stripe continuity along a line: neighbouring tiles whose stripes lie on
    the same a-line must be displaced to the same side."""
    pts = patch.points
    index = PointIndex(pts)
    rep = CheckReport()
    unit = np.array([[1, 0], [0, 1], [1, 1]], dtype=np.int64)
    for d in ADir:
        j = index.lookup(pts + unit[d])
        i = np.nonzero((j >= 0) & (patch.stripe == d))[0]
        j = j[i]
        same = patch.stripe[j] == d
        i, j = i[same], j[same]
        known = (patch.shift[i] >= 0) & (patch.shift[j] >= 0)
        rep.skipped += int((~known).sum())
        bad = known & (patch.shift[i] != patch.shift[j])
        for a in i[bad]:
            rep.violations.append(Violation("R1", int(pts[a, 0]), int(pts[a, 1]), d.name))
    return rep


def _vertex_tiles():
    """For each corner class, the three (offset in a-coords, wdir, sign) meeting at it.

    A corner p = x + w1 (x in Q) is shared by x, x + a1 and x + a1 + a2;
    a corner p = x + w2 by x, x + a2 and x + a1 + a2.
    """
    return {
        "w1": [((0, 0), WDir.W1, +1), ((1, 0), WDir.W21, +1), ((1, 1), WDir.W2, -1)],
        "w2": [((0, 0), WDir.W2, +1), ((0, 1), WDir.W21, -1), ((1, 1), WDir.W1, -1)],
    }


def vertex_end_colors(patch) -> dict[str, np.ndarray]:
    """(N, 3) colours at the two corners x + w1, x + w2 of every tile x."""
    pts = patch.points
    index = PointIndex(pts)
    out = {}
    for name, members in _vertex_tiles().items():
        cols = []
        for (dm, dn), w, sign in members:
            j = index.lookup(pts + np.array([dm, dn]))
            col = np.full(len(pts), -2, dtype=np.int64)
            ok = j >= 0
            col[ok] = end_colors(patch.stripe[j[ok]], patch.split[j[ok]], w, sign)
            cols.append(col)
        out[name] = np.stack(cols, axis=1)
    return out


def check_three_color(patch, symmetric_points: Iterable = ()) -> CheckReport:
    """The three diameter ends meeting at a corner are never monochromatic.

    ``symmetric_points`` lists corners (as PPoint) where a monochromatic
    triple is legal; those are reported in ``flagged`` instead.
    """
    from .lattice import PPoint

    allowed = {(p.p, p.q) for p in symmetric_points}
    rep = CheckReport()
    pts = patch.points
    offsets = {"w1": (1, 0), "w2": (0, 1)}
    for name, cols in vertex_end_colors(patch).items():
        complete = (cols >= -1).all(axis=1)
        known = complete & (cols >= 0).all(axis=1)
        rep.skipped += int((complete & ~known).sum())
        mono = known & (cols[:, 0] == cols[:, 1]) & (cols[:, 1] == cols[:, 2])
        for a in np.nonzero(mono)[0]:
            m, n = int(pts[a, 0]), int(pts[a, 1])
            pp = PPoint(2 * m - n, -m + 2 * n) + PPoint(*offsets[name])
            v = Violation("ThreeColor", m, n, f"corner {name} ({pp.p},{pp.q}) all {'red' if cols[a, 0] == RED else 'blue'}")
            (rep.flagged if (pp.p, pp.q) in allowed else rep.violations).append(v)
    return rep


def check_prototile(patch) -> CheckReport:
    """Each determined tile must be a rotated copy of one of the two prototiles:
    its parity is 1 exactly when the stripe is displaced toward the red end
    of the split diameter."""
    rep = CheckReport()
    det = patch.status == 0
    fields_known = (patch.stripe >= 0) & (patch.shift >= 0) & (patch.split >= 0) & (patch.parity >= 0)
    bad_fields = det & ~fields_known
    valid = det & fields_known
    in_range = (patch.stripe <= 2) & (patch.shift <= 1) & (patch.split <= 1) & (patch.parity <= 1)
    # shift 1 points at the split end whose colour is ``split``; red there means white
    implied = np.bitwise_xor(patch.shift, patch.split)
    bad = valid & (~in_range | (implied != patch.parity))
    for a in np.nonzero(bad | bad_fields)[0]:
        rep.violations.append(
            Violation("Prototile", int(patch.points[a, 0]), int(patch.points[a, 1]),
                      f"stripe={patch.stripe[a]} shift={patch.shift[a]} split={patch.split[a]} parity={patch.parity[a]}")
        )
    rep.skipped = int((~det).sum())
    return rep


def check_all(patch, symmetric_points: Iterable = ()) -> CheckReport:
    total = CheckReport()
    for rep in (check_r1(patch), check_r2(patch), check_three_color(patch, symmetric_points),
                check_prototile(patch)):
        total.violations += rep.violations
        total.flagged += rep.flagged
        total.skipped += rep.skipped
    return total


def check_aperiodicity(points: np.ndarray, parity: np.ndarray, rmax: int,
                       min_overlap: int = 61) -> tuple[CheckReport, list[QPoint]]:
    """Smoke test: no nonzero translation |t| <= rmax preserves the parity pattern.

    Returns the report and the list of translations skipped for lack of overlap.
    """
    pts = np.asarray(points, dtype=np.int64)
    parity = np.asarray(parity, dtype=np.int64)
    index = PointIndex(pts)
    rep = CheckReport()
    skipped = []
    for tm in range(0, rmax + 1):
        for tn in range(-rmax, rmax + 1):
            t = QPoint(tm, tn)
            # t and -t give the same comparison
            if (tm == 0 and tn <= 0) or hex_distance(t) > rmax:
                continue
            j = index.lookup(pts + np.array([tm, tn]))
            ok = (j >= 0) & (parity >= 0)
            ok[ok] &= parity[j[ok]] >= 0
            if ok.sum() < min_overlap:
                skipped.append(t)
                continue
            if np.array_equal(parity[ok], parity[j[ok]]):
                rep.violations.append(Violation("Periodicity", tm, tn, f"overlap {int(ok.sum())}"))
    rep.skipped = len(skipped)
    return rep, skipped


def format_report(report: CheckReport) -> str:
    lines = [v.line() for v in report.violations]
    lines += [f"# flagged {v.line()}" for v in report.flagged]
    lines.append(f"# violations={len(report.violations)} flagged={len(report.flagged)} skipped={report.skipped}")
    return "\n".join(lines) + "\n"
