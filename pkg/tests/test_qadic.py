from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from hexlimit.lattice import PPoint, QPoint, ADir, WDir
from hexlimit.qadic import (
    Dyadic, InsufficientDepth, NotExact, PbarElem, QSpecError, QadicParam, Verdict, classify,
    format_qspec, generic_to_depth, lemma_s_check, nonorientable_point, parse_qspec, residue,
    torsion_check, torsion_elements,
)

odd = st.integers(1, 99).map(lambda k: 2 * k - 1)
rationals = st.builds(Fraction, st.integers(-500, 500), odd)


def brute_residue(x: Fraction, k: int) -> int:
    """The unique a in [0, 2^k) with 2^k dividing the numerator of x - a."""
    hits = [a for a in range(1 << k) if (x - a).numerator % (1 << k) == 0]
    assert len(hits) == 1
    return hits[0]


def test_residues_of_minus_third():
    q = parse_qspec("rat:-1/3,0")
    assert [residue(q, k) for k in range(1, 9)] == [QPoint(c, 0) for c in (1, 1, 5, 5, 21, 21, 85, 85)]


def test_residue_examples():
    assert all(residue(QadicParam.exact(0, 0), k) == QPoint(0, 0) for k in range(20))
    assert residue(QadicParam.exact(Fraction(2, 3), Fraction(1, 3)), 2) == QPoint(2, 3)


@given(rationals, rationals, st.integers(1, 9))
def test_residue_matches_brute_force(u, v, k):
    r = residue(QadicParam.exact(u, v), k)
    assert r == QPoint(brute_residue(u, k), brute_residue(v, k))


@given(rationals, rationals, st.integers(1, 40))
def test_residues_are_coherent(u, v, k):
    q = QadicParam.exact(u, v)
    lo, hi = residue(q, k), residue(q, k + 1)
    assert (hi.m - lo.m) % (1 << k) == 0 and (hi.n - lo.n) % (1 << k) == 0


def test_residue_form_depth_enforced():
    q = QadicParam.from_residue(5, 3, 4)
    assert residue(q, 4) == QPoint(5, 3)
    assert residue(q, 2) == QPoint(1, 3)
    with pytest.raises(InsufficientDepth):
        residue(q, 5)


def test_even_denominator_rejected():
    with pytest.raises(QSpecError):
        parse_qspec("rat:1/2,0")


@pytest.mark.parametrize("spec", ["", "rat:1", "cht:a,b", "res:K=3;u=1", "icwl:left", "foo:1,2"])
def test_malformed_qspecs(spec):
    with pytest.raises(QSpecError):
        parse_qspec(spec)


@pytest.mark.parametrize("spec", ["rat:-1/3,0", "rat:2/3,1/3", "cht:4,-7", "res:K=12;u=77;v=5"])
def test_qspec_roundtrip(spec):
    q = parse_qspec(spec)
    assert parse_qspec(format_qspec(q)) == q


def test_icwl_specs():
    assert parse_qspec("icwl:up") == QadicParam.exact(Fraction(2, 3), Fraction(1, 3))
    assert parse_qspec("icwl:down+1,2") == QadicParam.exact(Fraction(4, 3), Fraction(8, 3))


@given(rationals, rationals, rationals, rationals, st.integers(1, 30))
def test_dyadic_arithmetic_respects_residues(a, b, c, d, k):
    p, q = QadicParam.exact(a, b), QadicParam.exact(c, d)
    s, t = residue(p, k), residue(q, k)
    r = residue(p + q, k)
    assert r == QPoint((s.m + t.m) % (1 << k), (s.n + t.n) % (1 << k))
    r = residue(p * 3, k)
    assert r == QPoint((3 * s.m) % (1 << k), (3 * s.n) % (1 << k))


def test_dyadic_residue_depth_propagates():
    a = Dyadic.residue(5, 6)
    b = Dyadic.of(Fraction(1, 3))
    assert (a + b).known_depth == 6
    assert (a + b).mod(6) == (5 + pow(3, -1, 64)) % 64


@pytest.mark.parametrize("k", [0, 1, 2, 7, 30])
def test_scaling_identities(k):
    assert lemma_s_check(k)


def test_scaling_identity_base_case():
    # 2 w1 = w2 + a1 in P
    assert PPoint(1, 0) * 2 == PPoint(0, 1) + QPoint(1, 0).to_ppoint()


def test_torsion():
    assert torsion_check(64)
    t1, t2 = torsion_elements()
    assert not t1.is_zero(8) and not t2.is_zero(8)
    assert (t1 * 3).is_zero(8)
    assert PbarElem.from_ppoint(PPoint(0, 0)).is_zero(8)


@pytest.mark.parametrize("spec,label,fiber", [
    ("cht:0,0", "CHT, fiber 12", 12),
    ("cht:3,-5", "CHT, fiber 12", 12),
    ("rat:-1/3,0", "IaL(A1), fiber 2", 2),
    ("rat:0,1/3", "IaL(A2), fiber 2", 2),
    ("rat:1/3,1/3", "IaL(A12), fiber 2", 2),
    ("rat:1/5,2/5", "IwL(W2), fiber 2", 2),
    ("rat:2/5,1/5", "IwL(W1), fiber 2", 2),
    ("rat:1/5,-1/5", "IwL(W21), fiber 2", 2),
    ("rat:2/3,1/3", "ICwL(Up), fiber 6", 6),
    ("rat:1/3,2/3", "ICwL(Down), fiber 6", 6),
    ("rat:1/7,3/7", "GenericToDepth(inf), fiber 1", 1),
])
def test_classify_table(spec, label, fiber):
    c = classify(parse_qspec(spec))
    assert str(c) == label
    assert c.fiber == fiber


@given(rationals, rationals)
def test_classify_conditions(u, v):
    c = classify(QadicParam.exact(u, v))
    ints = lambda x: x.denominator == 1
    a_conditions = [ints(v), ints(u), ints(u - v)]
    w_conditions = [ints(u - 2 * v), ints(2 * u - v), ints(u + v)]
    if c.verdict is Verdict.CHT:
        assert all(a_conditions)
    elif c.verdict is Verdict.ICWL:
        assert all(w_conditions) and not any(a_conditions)
    elif c.verdict is Verdict.IAL:
        assert sum(a_conditions) == 1 and not any(w_conditions)
        assert a_conditions[c.direction]
    elif c.verdict is Verdict.IWL:
        assert sum(w_conditions) == 1 and not any(a_conditions)
    else:
        assert not any(a_conditions) and not any(w_conditions)


def test_classify_needs_exact():
    q = QadicParam.from_residue(3, 5, 10)
    with pytest.raises(NotExact):
        classify(q)
    assert str(generic_to_depth(q)) == "GenericToDepth(10), fiber 1"


def test_nonorientable_point():
    assert nonorientable_point(parse_qspec("rat:2/3,1/3")) == PPoint(1, 0)
    assert nonorientable_point(parse_qspec("rat:1/3,2/3")) == PPoint(0, 1)
    assert nonorientable_point(parse_qspec("cht:0,0")) is None
    assert nonorientable_point(parse_qspec("rat:-1/3,0")) is None
    # translating q by a lattice vector moves the point along
    assert nonorientable_point(parse_qspec("icwl:up+1,0")) == PPoint(1, 0) + QPoint(1, 0).to_ppoint()
