import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hexlimit.acceptance import random_generic_q
from hexlimit.lattice import ADir, QPoint, TripleCoord, from_triple, hex_ball_array
from hexlimit.marking import (
    DETERMINED, FREE, PRECISION, FreeBitsError, FreeBitsRequired, NoUniqueStripe, OnUncoloredLine,
    OnUndeterminedLine, Patch, color_bit_formula, format_freebits, formula_marks, free_lines,
    generate_patch, geometric_marks, parity, parse_freebits, shift_bit_formula, stripe_dir,
    tile_mark_geometric, validate_freebits,
)
from hexlimit.qadic import QadicParam, classify, parse_qspec
from hexlimit.triangulation import PrecisionExceeded, TriContext

DEPTH = 40
generic = st.integers(0, 10**9).map(random_generic_q)


@pytest.fixture(scope="module")
def cht():
    return TriContext.for_radius(parse_qspec("cht:0,0"), 16)


def at(t):
    return from_triple(TripleCoord(*t))


def test_stripe_examples(cht):
    assert stripe_dir(cht, QPoint(4, 8)) is ADir.A1
    assert stripe_dir(cht, QPoint(1, 0)) is ADir.A1
    with pytest.raises(NoUniqueStripe):
        stripe_dir(cht, QPoint(0, 0))


def test_shift_examples(cht):
    assert shift_bit_formula(cht, at((2, -3, 1))) == 0
    assert shift_bit_formula(cht, at((2, -5, 3))) == 1
    with pytest.raises(OnUndeterminedLine):
        shift_bit_formula(cht, at((4, -4, 0)))


def test_color_examples(cht):
    assert color_bit_formula(cht, at((2, -3, 1))) == 0
    assert color_bit_formula(cht, at((-6, 1, 5))) == 1


def test_free_shift_does_not_free_the_colour(cht):
    # on (4,-4,0) only t1 + t2 vanishes; t2 - t1 = -8 keeps the colour forced
    assert color_bit_formula(cht, at((4, -4, 0))) == 1
    splits = {generate_patch(parse_qspec("cht:0,0"), 6, freebits=(i,)).tile(QPoint(4, 4)).split
              for i in range(12)}
    assert splits == {1}


def test_uncoloured_line():
    # q on the W1 line through the origin: m - 2n = 0 there
    ctx = TriContext.for_radius(parse_qspec("rat:2/5,1/5"), 8)
    hits = 0
    for m, n in hex_ball_array(8).tolist():
        if m - 2 * n != 0:
            continue
        try:
            color_bit_formula(ctx, QPoint(m, n))
        except OnUncoloredLine:
            hits += 1
    assert hits > 0


def test_parity_examples(cht):
    assert parity(cht, at((2, -3, 1))) == 0
    assert parity(cht, at((-6, 1, 5))) == 1


def test_residue_form_reports_precision():
    ctx = TriContext(QadicParam.from_residue(0, 0, 12), 12)
    with pytest.raises(PrecisionExceeded):
        shift_bit_formula(ctx, QPoint(1, 0))


@given(generic)
def test_formula_equals_geometric(q):
    ctx = TriContext(q, DEPTH)
    pts = hex_ball_array(20)
    f, g = formula_marks(ctx, pts), geometric_marks(ctx, pts)
    assert (f.status == DETERMINED).all() and (g.status == DETERMINED).all()
    for a, b in zip(f[:4], g[:4]):
        assert np.array_equal(a, b)


@given(generic, st.integers(-30, 30), st.integers(-30, 30))
def test_parity_is_shift_xor_split(q, m, n):
    ctx = TriContext(q, DEPTH)
    x = QPoint(m, n)
    mark = tile_mark_geometric(ctx, x)
    assert mark.parity == int(mark.shift) ^ mark.split == parity(ctx, x)
    assert mark.stripe is stripe_dir(ctx, x)


@given(generic, st.integers(-20, 20), st.integers(-20, 20))
def test_translation_by_deep_lattice_vector(q, m, n):
    # x and x + 2^K' v see the same valuations below K'
    ctx = TriContext(q, DEPTH)
    x = QPoint(m, n)
    y = x + QPoint(3 << 24, 5 << 24)
    assert parity(ctx, x) == parity(ctx, y)


def test_stable_between_depths():
    q = QadicParam.from_residue(0x9E3779B97, 0x7F4A7C15, DEPTH)
    a = generate_patch(q, 24, K=20)
    b = generate_patch(q, 24, K=21)
    both = a.determined & b.determined
    assert both.mean() > 0.99
    assert np.array_equal(a.parity[both], b.parity[both])


@pytest.mark.parametrize("seed", range(8))
def test_cht_completions_are_limits_of_generic_parameters(seed):
    """q = 2^20 delta with delta generic: near the origin the patch is one of
    the twelve CHT completions, and every completion arises this way."""
    rng = np.random.default_rng(seed)
    completions = {i: generate_patch(parse_qspec("cht:0,0"), 6, freebits=(i,)) for i in range(12)}
    seen = set()
    for _ in range(25):
        du, dv = (int(v) for v in rng.integers(1, 1 << 19, size=2))
        q = QadicParam.from_residue((du << 20) % (1 << DEPTH), (dv << 20) % (1 << DEPTH), DEPTH)
        p = generate_patch(q, 6, K=DEPTH)
        assert p.determined.all()
        hits = [i for i, c in completions.items()
                if all(np.array_equal(getattr(c, f), getattr(p, f)) for f in ("stripe", "shift", "split", "parity"))]
        assert len(hits) == 1
        seen.update(hits)
    assert len(seen) >= 6


def test_all_cht_perturbations_cover_twelve():
    rng = np.random.default_rng(2024)
    completions = [generate_patch(parse_qspec("cht:0,0"), 4, freebits=(i,)) for i in range(12)]
    seen = set()
    for _ in range(200):
        du, dv = (int(v) for v in rng.integers(1, 1 << 19, size=2))
        p = generate_patch(QadicParam.from_residue(du << 20, dv << 20, DEPTH), 4, K=DEPTH)
        seen.update(i for i, c in enumerate(completions) if np.array_equal(c.parity, p.parity)
                    and np.array_equal(c.split, p.split) and np.array_equal(c.shift, p.shift))
    assert seen == set(range(12))


def test_infinite_a_line_patch():
    p = generate_patch(parse_qspec("rat:-1/3,0"), 8)
    assert len(p) == 217
    free = p.status == FREE
    assert free.sum() == 17
    # the free tiles are exactly the A1 stripes on the line n = 0
    assert set(map(tuple, p.points[free].tolist())) == {(m, 0) for m in range(-8, 9)}
    assert (p.stripe[free] == ADir.A1).all() and (p.shift[free] == -1).all()
    assert not (p.status == PRECISION).any()


def test_free_bits_complete_the_line():
    q = parse_qspec("rat:-1/3,0")
    p0, p1 = generate_patch(q, 8, freebits=(0,)), generate_patch(q, 8, freebits=(1,))
    assert p0.determined.all() and p1.determined.all()
    line = p0.points[:, 1] == 0
    assert (p0.shift[line] == 0).all() and (p1.shift[line] == 1).all()
    assert np.array_equal(p0.parity[~line], p1.parity[~line])


def test_free_tile_requires_bits():
    ctx = TriContext.for_radius(parse_qspec("rat:-1/3,0"), 8)
    with pytest.raises(FreeBitsRequired):
        tile_mark_geometric(ctx, QPoint(3, 0))
    assert tile_mark_geometric(ctx, QPoint(3, 0), (1,)).shift == 1


def test_free_lines():
    assert free_lines(parse_qspec("rat:1/5,2/5")) == [(1, 0)]
    assert len(free_lines(parse_qspec("rat:2/3,1/3"))) == 3
    assert free_lines(parse_qspec("cht:0,0")) == []
    assert free_lines(QadicParam.from_residue(3, 3, 8)) == []


def test_icwl_completions_all_determined():
    q = parse_qspec("rat:2/3,1/3")
    for bits in [(0, 0, 0), (1, 1, 1), (0, 1, 0)]:
        assert generate_patch(q, 6, freebits=bits).determined.all()


def test_freebits_parsing_and_validation():
    assert parse_freebits("-") is None and parse_freebits(None) is None
    assert parse_freebits("1,0,1") == (1, 0, 1)
    assert format_freebits((1, 0, 1)) == "1,0,1" and format_freebits(None) == "-"
    with pytest.raises(FreeBitsError):
        parse_freebits("1,x")
    cht = classify(parse_qspec("cht:0,0"))
    validate_freebits(cht, (11,))
    for bad in [(12,), (1, 2), (-1,)]:
        with pytest.raises(FreeBitsError):
            validate_freebits(cht, bad)
    with pytest.raises(FreeBitsError):
        validate_freebits(classify(parse_qspec("rat:2/3,1/3")), (0, 2, 0))
    with pytest.raises(FreeBitsError):
        validate_freebits(classify(parse_qspec("rat:1/7,3/7")), (0,))


def test_patch_text_roundtrip(tmp_path):
    p = generate_patch(parse_qspec("rat:-1/3,0"), 5)
    q = Patch.loads(p.dumps())
    for f in ("points", "stripe", "shift", "split", "parity", "status"):
        assert np.array_equal(getattr(p, f), getattr(q, f))
    assert (q.qspec, q.K, q.R, q.freebits) == (p.qspec, p.K, p.R, p.freebits)
    path = tmp_path / "p.txt"
    p.write(path)
    assert Patch.read(path).dumps() == p.dumps()


def test_parity_only_roundtrip():
    p = generate_patch(QadicParam.from_residue(77, 31, DEPTH), 4, K=DEPTH).to_parity_only()
    text = p.dumps()
    assert all(len(line.split("\t")) == 3 for line in text.splitlines()[2:])
    q = Patch.loads(text)
    assert q.parity_only and np.array_equal(q.parity, p.parity)


def test_patch_lookup_and_tiles():
    p = generate_patch(QadicParam.from_residue(77, 31, DEPTH), 3, K=DEPTH)
    t = p.tile(QPoint(1, -1))
    assert t.center == QPoint(1, -1) and t.determined
    assert len(list(p.tiles())) == len(p) == 37
    assert len(p.parity_map()) == 37


@pytest.mark.parametrize("text", [
    "",
    "not a patch\n",
    "#hexlimit-patch v1\n#q=rat:0,0 K=4\n",
    "#hexlimit-patch v1\n#q=cht:0,0 K=4 R=1 freebits=-\n0\t0\t1\n1\t0\t1\tA1\tPLUS\t0\tD\n",
])
def test_malformed_patch_files(text):
    with pytest.raises(ValueError):
        Patch.read(io.StringIO(text))
