"""Coset periods of the parity pattern, window measures, the total-index
series, orientation densities and completion counts at singular parameters."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from . import _kernels as kern
from .lattice import QPoint, hex_ball_array
from .marking import DETERMINED, Patch, freebit_count, generate_patch
from .qadic import NotExact, QadicParam, Verdict, classify, nonorientable_point
from .triangulation import TriContext, bulk_d, bulk_orientation
from .verify import check_all, check_three_color


class InsufficientSamples(ValueError):
    pass


class LevelUnresolved(ValueError):
    pass


# ------------------------------------------------------------------ coset periods

def parity_levels(ctx: TriContext, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(l, k) per point: level of the stripe line and of the split w-line.

    Both are valuations of triple-coordinate combinations of x - c_K, capped at K.
    """
    d1, d2 = bulk_d(ctx, np.asarray(pts, dtype=np.int64).reshape(-1, 2))
    t = np.stack([d2, -d1, d1 - d2])
    nu = np.stack([kern.val2_capped(row, ctx.K) for row in t])
    j = np.argmax(nu, axis=0)
    idx = np.arange(t.shape[1])
    l = nu[j, idx]
    k = kern.val2_capped(t[(j + 2) % 3, idx] - t[(j + 1) % 3, idx], ctx.K)
    return l, k


def predicted_period(ctx: TriContext, pts: np.ndarray) -> np.ndarray:
    """max(k + 1, l + 1), or -1 where a level is not resolved at depth K."""
    l, k = parity_levels(ctx, pts)
    m = np.maximum(k, l) + 1
    return np.where((l >= ctx.K - 1) | (k >= ctx.K - 1), -1, m)


@dataclass(frozen=True)
class CosetReport:
    x: QPoint
    period_exponent: int  # smallest m with parity constant on the sampled x + 2^m Q
    predicted_m: int
    verified: bool
    sample_count: int


def _in_coset(pts: np.ndarray, x: QPoint, m: int) -> np.ndarray:
    mask = (1 << m) - 1
    return ((pts[:, 0] - x.m) & mask == 0) & ((pts[:, 1] - x.n) & mask == 0)


def coset_period(ctx: TriContext, x: QPoint, patch: Patch, min_samples: int = 8) -> CosetReport:
    predicted = int(predicted_period(ctx, np.array([[x.m, x.n]]))[0])
    if predicted < 0:
        raise LevelUnresolved(f"levels at {x} reach the depth K={ctx.K}")
    i = patch.index_of(x)
    if patch.status[i] != DETERMINED:
        raise LevelUnresolved(f"tile {x} is not determined")
    det = patch.status == DETERMINED
    pts, par = patch.points[det], patch.parity[det]
    target = patch.parity[i]
    sel = _in_coset(pts, x, predicted)
    count = int(sel.sum())
    if count < min_samples:
        raise InsufficientSamples(f"{count} samples of {x} + 2^{predicted} Q in the patch")
    verified = bool((par[sel] == target).all())
    empirical = predicted
    for m in range(predicted + 1):
        if (par[_in_coset(pts, x, m)] == target).all():
            empirical = m
            break
    return CosetReport(x, empirical, predicted, verified, count)


# ------------------------------------------------------------------ window measure

@dataclass(frozen=True)
class WindowReport:
    white: Fraction
    gray: Fraction
    unresolved: Fraction
    cosets: int


def window_accounting(ctx: TriContext, radius: int) -> WindowReport:
    """Measure of the union of parity-constant cosets x + 2^m Q met by the ball.

    A coset x + 2^m Q has measure 4^-m.  Tiles in one predicted coset share
    their levels, so the predicted cosets never overlap.
    """
    from .marking import formula_marks

    pts = hex_ball_array(radius)
    marks = formula_marks(ctx, pts)
    m = predicted_period(ctx, pts)
    ok = (marks.status == DETERMINED) & (m >= 0)
    pts, m, par = pts[ok], m[ok], marks.parity[ok]
    mask = np.left_shift(1, m) - 1
    keys = np.stack([m, pts[:, 0] & mask, pts[:, 1] & mask], axis=1)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    colour = np.full(len(uniq), -1, dtype=np.int64)
    colour[inverse] = par
    mixed = np.zeros(len(uniq), dtype=bool)
    np.logical_or.at(mixed, inverse, par != colour[inverse])
    if mixed.any():
        raise RuntimeError("a predicted coset carries both parities")
    white = gray = Fraction(0)
    for (mm, _, _), c in zip(uniq.tolist(), colour.tolist()):
        if c == 1:
            white += Fraction(1, 4 ** mm)
        else:
            gray += Fraction(1, 4 ** mm)
    return WindowReport(white, gray, 1 - white - gray, len(uniq))


# ------------------------------------------------------------------ index series

@dataclass(frozen=True)
class IndexSeries:
    terms: tuple[Fraction, ...]
    partial_sums: tuple[Fraction, ...]
    limit: Fraction


def index_term(k: int) -> Fraction:
    """c(V_k): level-k vertex cosets counted against 4 * 4^k."""
    return Fraction(12 * ((1 << (k - 1)) - 1) + 6, 4 * 4 ** k)


def index_partial_closed_form(n: int) -> Fraction:
    return 1 - Fraction(3, 2) / 2 ** n + Fraction(1, 2) / 4 ** n


def total_index_series(kmax: int) -> IndexSeries:
    if kmax < 1:
        raise ValueError("kmax must be at least 1")
    terms = tuple(index_term(k) for k in range(1, kmax + 1))
    partial = tuple(itertools.accumulate(terms))
    # sum (6 2^k - 6) / 4^(k+1) = (3/2) sum 2^-k - (3/2) sum 4^-k
    limit = Fraction(3, 2) * 1 - Fraction(3, 2) * Fraction(1, 3)
    return IndexSeries(terms, partial, limit)


# ------------------------------------------------------------------ orientation density

class OrientationDensity(NamedTuple):
    up_fraction: float
    down_fraction: float
    up: int
    down: int
    unknown: int
    total: int


def orientation_density(ctx: TriContext, radius: int) -> OrientationDensity:
    """Fractions of Up and Down points among the P-points x, x + w1, x + w2
    for x in the ball (Q-points make up the remaining third)."""
    pts = hex_ball_array(radius)
    base = np.stack([2 * pts[:, 0] - pts[:, 1], -pts[:, 0] + 2 * pts[:, 1]], axis=1)
    ppts = np.concatenate([base, base + [1, 0], base + [0, 1]])
    kind, _ = bulk_orientation(ctx, ppts)
    up, down, unknown = int((kind == 1).sum()), int((kind == 2).sum()), int((kind == 0).sum())
    total = len(ppts)
    return OrientationDensity(up / total, down / total, up, down, unknown, total)


# ------------------------------------------------------------------ completions

@dataclass(frozen=True)
class Completion:
    freebits: tuple[int, ...] | None
    patch: Patch
    symmetric: bool


def fiber_completions(q: QadicParam, radius: int) -> list[Completion]:
    """Distinct legal, fully determined patches over all free-bit choices."""
    if not q.is_exact:
        raise NotExact("completion counts need an exact parameter")
    sing = classify(q)
    sym = [nonorientable_point(q)] if sing.verdict is Verdict.ICWL else []
    if sing.verdict is Verdict.CHT:
        choices = [(c,) for c in range(12)]
    elif sing.verdict is Verdict.GENERIC:
        choices = [None]
    else:
        choices = list(itertools.product((0, 1), repeat=freebit_count(sing)))
    seen: dict[bytes, Completion] = {}
    for fb in choices:
        patch = generate_patch(q, radius, freebits=fb)
        if (patch.status != DETERMINED).any() or check_all(patch, sym).violations:
            continue
        key = b"".join(a.astype(np.int8).tobytes() for a in patch.marks[:4])
        if key not in seen:
            flagged = bool(check_three_color(patch, sym).flagged)
            seen[key] = Completion(fb, patch, flagged)
    return list(seen.values())


def fiber_experiment(q: QadicParam, radius: int) -> int:
    return len(fiber_completions(q, radius))
