"""Recover the parameter q from a bare parity patch.

Corners of triangles of level >= 1 (the coset c_1 + 2Q) never sit inside a
ring of six neighbours with five or more of one colour; every other coset of
Q / 2Q eventually does.  Keeping the surviving coset and halving scale
leaves a parity patch of the same kind, because parity(2z) = parity(z).
Repeating yields c_1, c_2, ... one binary digit at a time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import HEX_NEIGHBOURS, QPoint, hex_distance
from .marking import DETERMINED, Patch, generate_patch
from .qadic import QadicParam
from .verify import PointIndex

_RING = np.array([[d.m, d.n] for d in HEX_NEIGHBOURS], dtype=np.int64)
_COSETS = ((0, 0), (1, 0), (0, 1), (1, 1))

# ring code (bit i = parity of neighbour i) -> five or more of one colour
FORBIDDEN_RING = np.array([bin(c).count("1") not in (2, 3, 4) for c in range(64)], dtype=bool)


class Ambiguous(ValueError):
    def __init__(self, survivors):
        super().__init__(f"cosets {sorted(survivors)} all survive; patch too small")
        self.survivors = survivors


class NoSurvivor(ValueError):
    pass


@dataclass
class ParityPatch:
    points: np.ndarray  # (N, 2) a-coordinates
    bits: np.ndarray  # 1 white, 0 gray, -1 unknown
    radius: int

    @classmethod
    def from_patch(cls, patch: Patch) -> "ParityPatch":
        bits = np.where(patch.status == DETERMINED, patch.parity, -1)
        return cls(patch.points.copy(), bits.astype(np.int64), patch.R)

    def to_patch(self) -> Patch:
        unknown = np.full(len(self.points), -1, dtype=np.int64)
        status = np.where(self.bits >= 0, DETERMINED, 1).astype(np.int64)
        return Patch(self.points, unknown, unknown.copy(), unknown.copy(), self.bits, status,
                     "-", 0, self.radius, "-", True)

    def ring_codes(self) -> tuple[np.ndarray, np.ndarray]:
        """6-bit ring pattern per point and whether the ring is complete."""
        index = PointIndex(self.points)
        code = np.zeros(len(self.points), dtype=np.int64)
        full = np.ones(len(self.points), dtype=bool)
        for i, d in enumerate(_RING):
            j = index.lookup(self.points + d)
            ok = j >= 0
            bit = np.where(ok, self.bits[np.maximum(j, 0)], -1)
            full &= bit >= 0
            code |= np.maximum(bit, 0) << i
        return code, full


@dataclass
class Elimination:
    survivor: tuple[int, int] | None
    witnesses: dict[tuple[int, int], QPoint | None]  # first offending ring centre per coset
    checked: dict[tuple[int, int], int]  # complete rings examined per coset


def _coset_index(points: np.ndarray) -> np.ndarray:
    return (points[:, 0] & 1) + 2 * (points[:, 1] & 1)


def _eliminate_table(pp: ParityPatch):
    code, full = pp.ring_codes()
    bad = full & FORBIDDEN_RING[code]
    cos = _coset_index(pp.points)
    witnesses, checked = {}, {}
    for c, key in enumerate(_COSETS):
        in_c = cos == c
        checked[key] = int((full & in_c).sum())
        hits = np.nonzero(bad & in_c)[0]
        witnesses[key] = QPoint(*map(int, pp.points[hits[0]])) if len(hits) else None
    return witnesses, checked


def _eliminate_scan(pp: ParityPatch):
    lookup = {(int(m), int(n)): int(b) for (m, n), b in zip(pp.points, pp.bits)}
    witnesses = {key: None for key in _COSETS}
    checked = {key: 0 for key in _COSETS}
    for m, n in pp.points.tolist():
        ring = [lookup.get((m + d.m, n + d.n), -1) for d in HEX_NEIGHBOURS]
        if min(ring) < 0:
            continue
        key = (m & 1, n & 1)
        checked[key] += 1
        white = sum(ring)
        if (white >= 5 or white <= 1) and witnesses[key] is None:
            witnesses[key] = QPoint(m, n)
    return witnesses, checked


def eliminate_cosets(pp: ParityPatch, method: str = "table") -> Elimination:
    """Identify c_1 mod 2Q.  ``method`` is "table" (vectorised ring-pattern
    lookup) or "scan" (plain per-point count); both give the same answer."""
    witnesses, checked = (_eliminate_table if method == "table" else _eliminate_scan)(pp)
    survivors = [key for key in _COSETS if witnesses[key] is None]
    if not survivors:
        raise NoSurvivor("every coset shows a ring with five tiles of one colour")
    if len(survivors) > 1:
        raise Ambiguous(survivors)
    return Elimination(survivors[0], witnesses, checked)


def rescale(pp: ParityPatch, coset: tuple[int, int]) -> tuple[ParityPatch, QPoint]:
    """Keep the coset, map x to (x - rep) / 2 with rep its smallest member."""
    keep = ((pp.points[:, 0] & 1) == coset[0]) & ((pp.points[:, 1] & 1) == coset[1])
    pts = pp.points[keep]
    if len(pts) == 0:
        raise NoSurvivor(f"coset {coset} has no points in the patch")
    rep_idx = np.lexsort((pts[:, 1], pts[:, 0]))[0]
    rep = QPoint(int(pts[rep_idx, 0]), int(pts[rep_idx, 1]))
    new = (pts - [rep.m, rep.n]) // 2
    radius = max(hex_distance(QPoint(int(m), int(n))) for m, n in new) if len(new) else 0
    return ParityPatch(new, pp.bits[keep], radius), rep


@dataclass
class RecoveredParam:
    residues: list[QPoint]  # c_k mod 2^k for k = 1..depth
    depth: int
    audit: list[Elimination] = field(default_factory=list)
    reason: str = ""

    def as_param(self) -> QadicParam:
        c = self.residues[-1]
        return QadicParam.from_residue(c.m, c.n, self.depth)


def recover(pp: ParityPatch, dmax: int, method: str = "table") -> RecoveredParam:
    """Digits of q read off the patch alone, deepest first failure reported."""
    residues: list[QPoint] = []
    audit: list[Elimination] = []
    acc_m = acc_n = 0
    current = pp
    reason = "requested depth reached"
    for k in range(1, dmax + 1):
        try:
            elim = eliminate_cosets(current, method)
        except Ambiguous as exc:
            reason = f"ambiguous at level {k}: {exc}"
            break
        except NoSurvivor as exc:
            reason = f"no survivor at level {k}: {exc}"
            break
        current, rep = rescale(current, elim.survivor)
        # q = rep_1 + 2 q_1 = rep_1 + 2 rep_2 + 4 q_2 = ...
        acc_m += rep.m << (k - 1)
        acc_n += rep.n << (k - 1)
        mod = (1 << k) - 1
        residues.append(QPoint(acc_m & mod, acc_n & mod))
        audit.append(elim)
    return RecoveredParam(residues, len(residues), audit, reason)


@dataclass
class RoundtripReport:
    ok: bool
    depth: int
    compared: int
    diffs: list[QPoint]

    def __bool__(self) -> bool:
        return self.ok


def mld_check(pp: ParityPatch, reference: Patch | None = None, margin: int = 16,
              dmax: int = 64) -> RoundtripReport:
    """Rebuild full marks from the parity patch and compare on the interior.

    Compared: the regenerated parity against ``pp`` and, when given, every
    regenerated mark against ``reference``; only tiles the regeneration
    determines at the recovered depth count.
    """
    rec = recover(pp, dmax)
    if rec.depth < 2:
        return RoundtripReport(False, rec.depth, 0, [])
    radius = pp.radius
    regen = generate_patch(rec.as_param(), radius, K=rec.depth)
    index = PointIndex(pp.points)
    j = index.lookup(regen.points)
    dist = np.maximum.reduce([np.abs(regen.points[:, 0]), np.abs(regen.points[:, 1]),
                              np.abs(regen.points[:, 0] - regen.points[:, 1])])
    use = (regen.status == DETERMINED) & (dist <= radius - margin) & (j >= 0)
    bad = use & (regen.parity != pp.bits[np.maximum(j, 0)])
    if reference is not None:
        k = PointIndex(reference.points).lookup(regen.points)
        use &= k >= 0
        k = np.maximum(k, 0)
        for name in ("stripe", "shift", "split", "parity"):
            bad |= use & (getattr(regen, name) != getattr(reference, name)[k])
    diffs = [QPoint(int(m), int(n)) for m, n in regen.points[bad]]
    compared = int(use.sum())
    return RoundtripReport(compared > 0 and not diffs, rec.depth, compared, diffs)


def mld_roundtrip(q: QadicParam, radius: int, K: int | None = None,
                  freebits: tuple[int, ...] | None = None, margin: int = 16) -> RoundtripReport:
    original = generate_patch(q, radius, K, freebits)
    return mld_check(ParityPatch.from_patch(original), original, margin)
