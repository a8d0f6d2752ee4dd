import numpy as np
import pytest
from hypothesis import given, strategies as st

from hexlimit.acceptance import random_generic_q
from hexlimit.lattice import QPoint, hex_ball_array
from hexlimit.marking import DETERMINED, formula_marks, generate_patch
from hexlimit.qadic import QadicParam, residue
from hexlimit.reconstruct import (
    FORBIDDEN_RING, Ambiguous, NoSurvivor, ParityPatch, eliminate_cosets, mld_check, mld_roundtrip,
    recover, rescale,
)
from hexlimit.triangulation import TriContext

seeds = st.integers(0, 10**9)


def _pp(q, radius):
    return ParityPatch.from_patch(generate_patch(q, radius, K=40, cross_check=False))


def test_forbidden_ring_table():
    for code in range(64):
        white = bin(code).count("1")
        assert FORBIDDEN_RING[code] == (white >= 5 or white <= 1)


@given(seeds)
def test_first_digit_is_c1(seed):
    q = random_generic_q(seed)
    elim = eliminate_cosets(_pp(q, 24))
    c1 = residue(q, 1)
    assert elim.survivor == (c1.m, c1.n)
    assert all(w is not None for key, w in elim.witnesses.items() if key != elim.survivor)


@given(seeds)
def test_table_and_scan_agree(seed):
    pp = _pp(random_generic_q(seed), 16)
    a, b = eliminate_cosets(pp, "table"), eliminate_cosets(pp, "scan")
    assert a.survivor == b.survivor and a.checked == b.checked
    assert {k: v is None for k, v in a.witnesses.items()} == {k: v is None for k, v in b.witnesses.items()}


@pytest.mark.parametrize("seed", range(5))
def test_recover_matches_residues(seed):
    q = random_generic_q(100 + seed)
    rec = recover(_pp(q, 64), 4)
    assert rec.depth == 4 and rec.reason == "requested depth reached"
    assert rec.residues == [residue(q, k) for k in range(1, 5)]
    assert rec.as_param().residue(4) == residue(q, 4)
    assert len(rec.audit) == 4


def test_rescaled_patch_is_the_patch_of_the_halved_parameter():
    q = random_generic_q(17)
    pp = _pp(q, 32)
    c1 = residue(q, 1)
    half, rep = rescale(pp, (c1.m, c1.n))
    # x = rep + 2y and parity(2z) = parity(z) give P_q(x) = P_{(q - rep)/2}(y)
    u, v = q.u.mod(40), q.v.mod(40)
    q2 = QadicParam.from_residue((u - rep.m) >> 1, (v - rep.n) >> 1, 39)
    f = formula_marks(TriContext(q2, 39), half.points)
    known = (half.bits >= 0) & (f.status == DETERMINED)
    assert known.sum() > 200
    assert np.array_equal(half.bits[known], f.parity[known])


def test_rescale_empty_coset():
    pp = ParityPatch(np.array([[0, 0]]), np.array([1]), 0)
    with pytest.raises(NoSurvivor):
        rescale(pp, (1, 1))


def test_all_white_has_no_survivor():
    pts = hex_ball_array(6)
    pp = ParityPatch(pts, np.ones(len(pts), dtype=np.int64), 6)
    with pytest.raises(NoSurvivor):
        eliminate_cosets(pp)
    assert recover(pp, 5).depth == 0


def test_small_patch_is_ambiguous():
    pp = _pp(random_generic_q(2), 1)
    with pytest.raises(Ambiguous) as exc:
        eliminate_cosets(pp)
    assert len(exc.value.survivors) >= 2
    rec = recover(pp, 3)
    assert rec.depth == 0 and rec.reason.startswith("ambiguous at level 1")


def test_zero_depth_request():
    rec = recover(_pp(random_generic_q(4), 8), 0)
    assert rec.depth == 0 and rec.residues == []


@pytest.mark.parametrize("seed", range(3))
def test_mld_roundtrip(seed):
    q = random_generic_q(1000 + seed)
    report = mld_roundtrip(q, 96, K=40)
    assert report and report.depth >= 3 and report.compared > 0 and not report.diffs


def test_flipped_bit_breaks_roundtrip():
    q = random_generic_q(1001)
    patch = generate_patch(q, 96, K=40)
    pp = ParityPatch.from_patch(patch)
    assert mld_check(pp, patch)
    bad = ParityPatch(pp.points, pp.bits.copy(), pp.radius)
    i = int(np.nonzero((pp.points[:, 0] == 3) & (pp.points[:, 1] == -2))[0][0])
    bad.bits[i] ^= 1
    assert not mld_check(bad, patch)


def test_parity_patch_roundtrip():
    patch = generate_patch(random_generic_q(9), 6, K=40)
    pp = ParityPatch.from_patch(patch)
    back = pp.to_patch()
    assert back.parity_only and np.array_equal(back.parity, patch.parity)
    assert np.array_equal(ParityPatch.from_patch(back).bits, pp.bits)
    codes, full = pp.ring_codes()
    assert full.sum() == len(hex_ball_array(5))
