"""The acceptance suite, shared by the test-suite and ``hexlimit selftest``.

Each check returns a CriterionResult; nothing here loosens a threshold to
make a check pass.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .analysis import (
    InsufficientSamples,
    coset_period,
    fiber_completions,
    index_partial_closed_form,
    orientation_density,
    total_index_series,
)
from .lattice import QPoint, TripleCoord, from_triple
from .marking import (
    DETERMINED,
    color_bit_formula,
    formula_marks,
    generate_patch,
    geometric_marks,
    parity,
    shift_bit_formula,
)
from .qadic import (
    QadicParam,
    Verdict,
    classify,
    lemma_s_check,
    parse_qspec,
    residue,
    torsion_check,
)
from .reconstruct import ParityPatch, mld_check, recover
from .render import RenderStyle, Mode, render_svg
from .triangulation import Side, TriContext, edge_through, governing_shift
from .verify import check_aperiodicity, check_all, check_prototile, check_r2, check_three_color

RANDOM_DEPTH = 40


@dataclass(frozen=True)
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] {self.number:2d} {self.title}: {self.detail} ({self.seconds:.2f}s)"


def random_generic_q(seed: int, depth: int = RANDOM_DEPTH) -> QadicParam:
    """Residue-form parameter with odd low bit of u, drawn from a seeded generator."""
    rng = np.random.default_rng(seed)
    u = int(rng.integers(0, 1 << depth)) | 1
    v = int(rng.integers(0, 1 << depth))
    return QadicParam.from_residue(u, v, depth)


def _timed(number: int, title: str, fn: Callable[[], tuple[bool, str]]) -> CriterionResult:
    start = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash is a failure of the criterion, reported as such
        ok, detail = False, f"raised {type(exc).__name__}: {exc}"
    return CriterionResult(number, title, ok, detail, time.perf_counter() - start)


# ------------------------------------------------------------------ criteria

CHT_VERTICAL_STEPS = [TripleCoord(2 - 2 * k, -3 + k, 1 + k) for k in range(7)]


def parity_anchor() -> tuple[bool, str]:
    start = time.perf_counter()
    q = parse_qspec("cht:0,0")
    ctx = TriContext.for_radius(q, 16)
    x = from_triple(TripleCoord(2, -3, 1))
    par, shift = parity(ctx, x), shift_bit_formula(ctx, x)
    side = governing_shift(ctx, edge_through(ctx, x, classify_stripe(ctx, x))).side
    colors = [color_bit_formula(ctx, from_triple(t)) for t in CHT_VERTICAL_STEPS]
    elapsed = time.perf_counter() - start
    ok = (par == 0 and shift == 0 and side is Side.MINUS
          and colors[:3] == [0, 0, 0] and colors[4:] == [1, 1, 1] and elapsed < 1.0)
    return ok, f"parity={par} shift_bit={shift} side={side.name} colours={colors} in {elapsed:.3f}s"


def classify_stripe(ctx, x):
    from .marking import stripe_dir

    return stripe_dir(ctx, x)


def residue_anchor() -> tuple[bool, str]:
    q = parse_qspec("rat:-1/3,0")
    got = [residue(q, k) for k in range(1, 9)]
    want = [QPoint(c, 0) for c in (1, 1, 5, 5, 21, 21, 85, 85)]
    return got == want, f"{[r.m for r in got]}"


def algebraic_identities() -> tuple[bool, str]:
    lemma = all(lemma_s_check(k) for k in range(0, 31))
    torsion = torsion_check(64)
    return lemma and torsion, f"lemma_s_check(0..30)={lemma} torsion_check(64)={torsion}"


def _random_patches(count: int, radius: int, seed0: int = 0):
    for s in range(count):
        q = random_generic_q(seed0 + s)
        yield s, q, generate_patch(q, radius, K=RANDOM_DEPTH, cross_check=False)


def formula_oracle_equivalence(count: int = 100, radius: int = 48) -> tuple[bool, str]:
    start = time.perf_counter()
    from .lattice import hex_ball_array

    pts = hex_ball_array(radius)
    mismatches = compared = 0
    for s in range(count):
        ctx = TriContext(random_generic_q(s), RANDOM_DEPTH)
        f = formula_marks(ctx, pts)
        g = geometric_marks(ctx, pts)
        both = (f.status == DETERMINED) & (g.status == DETERMINED)
        compared += int(both.sum())
        mismatches += int((both & (f.parity != g.parity)).sum())
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and compared > 0 and elapsed < 60
    return ok, f"{compared} tiles compared, {mismatches} mismatches in {elapsed:.1f}s"


def rule_verification(count: int = 100, radius: int = 48, mutations: int = 50) -> tuple[bool, str]:
    rng = np.random.default_rng(12345)
    total = 0
    kept = []
    for s, q, patch in _random_patches(count, radius):
        for check in (check_r2, check_three_color, check_prototile):
            total += len(check(patch).violations)
        if s < mutations:
            kept.append(patch)
    caught = 0
    for m in range(mutations):
        patch = kept[m % len(kept)]
        det = np.nonzero(patch.status == DETERMINED)[0]
        i = int(rng.choice(det))
        field = ("shift", "split", "parity")[m % 3]
        arr = getattr(patch, field).copy()
        arr[i] ^= 1
        mutated = type(patch)(**{**_patch_fields(patch), field: arr})
        if check_all(mutated).violations:
            caught += 1
    ok = total == 0 and caught == mutations
    return ok, f"{total} violations on {count} patches; {caught}/{mutations} mutations caught"


def _patch_fields(patch):
    return {k: getattr(patch, k) for k in
            ("points", "stripe", "shift", "split", "parity", "status", "qspec", "K", "R", "freebits",
             "parity_only")}


def singularity_taxonomy() -> tuple[bool, str]:
    fixtures = {
        "cht:0,0": "CHT, fiber 12",
        "cht:5,-3": "CHT, fiber 12",
        "rat:-1/3,0": "IaL(A1), fiber 2",
        "rat:2/3,1/3": "ICwL(Up), fiber 6",
        "rat:1/3,2/3": "ICwL(Down), fiber 6",
    }
    labels = {spec: str(classify(parse_qspec(spec))) for spec in fixtures}
    class_ok = labels == fixtures
    counts = {}
    for spec in ("cht:0,0", "rat:-1/3,0", "rat:2/3,1/3"):
        comps = fiber_completions(parse_qspec(spec), 4)
        counts[spec] = (len(comps), sum(c.symmetric for c in comps))
    fiber_ok = counts == {"cht:0,0": (12, 0), "rat:-1/3,0": (2, 0), "rat:2/3,1/3": (8, 2)}
    return class_ok and fiber_ok, f"classes={list(labels.values())} fibers(count, symmetric)={list(counts.values())}"


def index_series() -> tuple[bool, str]:
    s = total_index_series(20)
    exact = all(ps == index_partial_closed_form(i + 1) for i, ps in enumerate(s.partial_sums))
    gap = 1 - s.partial_sums[-1]
    ok = (s.terms[0] == Fraction(3, 8) and s.terms[1] == Fraction(18, 64) and abs(gap) < Fraction(1, 10 ** 5)
          and s.limit == 1 and exact)
    return ok, f"c1={s.terms[0]} c2={s.terms[1]} 1-S20={float(gap):.3e} limit={s.limit}"


def orientation_densities(count: int = 10, radius: int = 128) -> tuple[bool, str]:
    worst = 0.0
    for s in range(count):
        d = orientation_density(TriContext(random_generic_q(s), RANDOM_DEPTH), radius)
        worst = max(worst, abs(d.up_fraction - 1 / 3), abs(d.down_fraction - 1 / 3))
    return worst <= 0.02, f"max deviation from 1/3 = {worst:.4f}"


def coset_structure(radius: int = 48, samples: int = 500, margin: int = 2) -> tuple[bool, str]:
    q = random_generic_q(7)
    ctx = TriContext(q, RANDOM_DEPTH)
    patch = generate_patch(q, radius, K=RANDOM_DEPTH)
    rng = np.random.default_rng(99)
    dist = np.maximum.reduce([np.abs(patch.points[:, 0]), np.abs(patch.points[:, 1]),
                              np.abs(patch.points[:, 0] - patch.points[:, 1])])
    candidates = np.nonzero((patch.status == DETERMINED) & (dist <= radius - margin))[0]
    rng.shuffle(candidates)
    verified = bounded = tested = skipped = 0
    for i in candidates:
        if tested >= samples:
            break
        x = QPoint(int(patch.points[i, 0]), int(patch.points[i, 1]))
        try:
            rep = coset_period(ctx, x, patch)
        except InsufficientSamples:
            skipped += 1
            continue
        tested += 1
        verified += rep.verified
        bounded += rep.period_exponent <= rep.predicted_m
    ok = tested >= samples and verified == tested and bounded == tested
    return ok, f"{verified}/{tested} verified, {bounded}/{tested} with empirical m <= predicted; {skipped} tiles skipped for < 8 coset samples"


def reconstruction_roundtrip(count: int = 20, radius: int = 96) -> tuple[bool, str]:
    start = time.perf_counter()
    residue_ok = mld_ok = 0
    depths = []
    for s, q, patch in _random_patches(count, radius, seed0=1000):
        pp = ParityPatch.from_patch(patch)
        rec = recover(pp, 3)
        residue_ok += rec.depth == 3 and all(rec.residues[k - 1] == residue(q, k) for k in (1, 2, 3))
        report = mld_check(pp, patch, margin=16)
        mld_ok += bool(report)
        depths.append(report.depth)
    elapsed = time.perf_counter() - start
    ok = residue_ok == count and mld_ok == count and elapsed < 120
    return ok, (f"residues k<=3 correct {residue_ok}/{count}, mld {mld_ok}/{count}, "
                f"recovered depths {min(depths)}..{max(depths)} in {elapsed:.1f}s")


def aperiodicity(count: int = 10, radius: int = 64, rmax: int = 16) -> tuple[bool, str]:
    found = 0
    skipped = 0
    for s, q, patch in _random_patches(count, radius, seed0=2000):
        rep, skip = check_aperiodicity(patch.points, np.where(patch.status == DETERMINED, patch.parity, -1), rmax)
        found += len(rep.violations)
        skipped += len(skip)
    return found == 0, f"{found} periods found, {skipped} translations skipped"


def determinism() -> tuple[bool, str]:
    q = random_generic_q(3)
    a = generate_patch(q, 12, K=RANDOM_DEPTH)
    b = generate_patch(q, 12, K=RANDOM_DEPTH)
    cht_a = generate_patch(parse_qspec("cht:0,0"), 6, freebits=(5,))
    cht_b = generate_patch(parse_qspec("cht:0,0"), 6, freebits=(5,))
    same_patch = a.dumps() == b.dumps() and cht_a.dumps() == cht_b.dumps()
    same_svg = all(
        render_svg(x, RenderStyle(mode=m)) == render_svg(y, RenderStyle(mode=m))
        for x, y in ((a, b), (cht_a, cht_b)) for m in Mode
    )
    return same_patch and same_svg, f"patch bytes identical={same_patch} svg bytes identical={same_svg}"


CRITERIA: list[tuple[int, str, Callable[[], tuple[bool, str]]]] = [
    (1, "parity anchor", parity_anchor),
    (2, "residue anchor", residue_anchor),
    (3, "algebraic identities", algebraic_identities),
    (4, "formula/oracle equivalence", formula_oracle_equivalence),
    (5, "rule verification", rule_verification),
    (6, "singularity taxonomy", singularity_taxonomy),
    (7, "total-index series", index_series),
    (8, "orientation density", orientation_densities),
    (9, "model-set coset structure", coset_structure),
    (10, "reconstruction roundtrip", reconstruction_roundtrip),
    (11, "aperiodicity smoke test", aperiodicity),
    (12, "determinism", determinism),
]


def run(numbers: list[int] | None = None) -> list[CriterionResult]:
    return [_timed(n, title, fn) for n, title, fn in CRITERIA if numbers is None or n in numbers]
