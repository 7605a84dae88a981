from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lipone.realsets import (CantorSet, GeometricAlpha, IntervalSet, Membership, PrefixAlpha, ProductSet,
                             RadialSet, cantor_measure, cantor_stage, cantor_window_measure, contains, fat_cantor,
                             intersect, make_interval_set, measure, parse_set, set_to_json, stage_endpoints)


def exact_stage(alpha, n):
    """Stage intervals in exact rational arithmetic, built gap by gap."""
    pieces = [(Fraction(0), Fraction(1))]
    for k in range(1, n + 1):
        a = alpha(k)
        nxt = []
        for lo, hi in pieces:
            mid = (lo + hi) / 2
            nxt += [(lo, mid - a / 2), (mid + a / 2, hi)]
        pieces = nxt
    return pieces


def quarter(k):
    return Fraction(1, 4**k)


def brute_measure(pairs):
    """Measure of a union via a sweep over all endpoints."""
    pts = sorted({p for ab in pairs for p in ab})
    total = 0.0
    for a, b in zip(pts, pts[1:]):
        m = 0.5 * (a + b)
        if any(lo <= m <= hi for lo, hi in pairs):
            total += b - a
    return total


intervals = st.lists(
    st.tuples(st.integers(-20, 20), st.integers(0, 6)).map(lambda t: (t[0] / 4, (t[0] + t[1]) / 4)),
    max_size=8)


# --- interval sets -----------------------------------------------------------


def test_make_merges_and_sorts():
    s = make_interval_set([(2, 3), (0, 1), (1, 1.5), (5, 5)])
    assert s.pairs() == [(0.0, 1.5), (2.0, 3.0), (5.0, 5.0)]
    assert s.measure() == 2.5


@pytest.mark.parametrize("bad", [[(1, 0)], [(0, float("inf"))], [(float("nan"), 1)]])
def test_make_rejects(bad):
    with pytest.raises(ValueError):
        make_interval_set(bad)


def test_empty():
    e = IntervalSet.empty()
    assert e.is_empty and e.measure() == 0.0 and len(e) == 0
    assert measure(intersect(e, make_interval_set([(0, 1)]))) == 0.0


@given(intervals, intervals)
def test_intersection_measure_matches_sweep(a, b):
    A, B = make_interval_set(a), make_interval_set(b)
    inter = [(max(p[0], q[0]), min(p[1], q[1])) for p in A for q in B if max(p[0], q[0]) <= min(p[1], q[1])]
    assert measure(intersect(A, B)) == pytest.approx(brute_measure(inter), abs=1e-12)
    assert measure(A.union(B)) == pytest.approx(brute_measure(a + b), abs=1e-12)


@given(intervals, st.floats(-6, 6), st.floats(0, 4))
def test_window_measure_matches_clipping(a, u, w):
    A = make_interval_set(a)
    v = u + w
    clipped = [(max(lo, u), min(hi, v)) for lo, hi in A if max(lo, u) <= min(hi, v)]
    assert float(A.window_measure(u, v)) == pytest.approx(brute_measure(clipped), abs=1e-12)


@given(intervals, st.floats(-6, 6))
def test_contains_and_distance(a, x):
    A = make_interval_set(a)
    inside = any(lo <= x <= hi for lo, hi in A)
    assert bool(A.contains(x)) == inside
    d = min((max(lo - x, x - hi, 0.0) for lo, hi in A), default=np.inf)
    assert float(A.distance(x)) == pytest.approx(d, abs=1e-12)


def test_window_inside_one_piece_is_exact():
    s = make_interval_set([(0.1, 0.9)])
    assert s.window_measure(0.4, 0.6) == 0.6 - 0.4


def test_components():
    s = make_interval_set([(0, 0), (1, 2), (3, 3)])
    assert s.components(degenerate=True).pairs() == [(0.0, 0.0), (3.0, 3.0)]
    assert s.components(degenerate=False).pairs() == [(1.0, 2.0)]


# --- fat Cantor sets ---------------------------------------------------------


@pytest.mark.parametrize("n", range(0, 9))
def test_stage_matches_rational_construction(n):
    cs = fat_cantor()
    exact = exact_stage(quarter, n)
    got = cantor_stage(cs, n)
    assert len(got) == 2**n
    np.testing.assert_array_equal(got.lo, [float(a) for a, _ in exact])
    np.testing.assert_array_equal(got.hi, [float(b) for _, b in exact])


@pytest.mark.parametrize("n", [1, 2, 3, 5, 10])
def test_stage_measure_closed_form(n):
    cs = fat_cantor()
    exact = 1 - sum(Fraction(2 ** (j - 1), 4**j) for j in range(1, n + 1))
    assert cs.stage_measure(n) == pytest.approx(float(exact), abs=1e-15)
    assert cs.stage(n).measure() == pytest.approx(float(exact), abs=1e-13)


def test_measure_of_limit_set():
    value, err = cantor_measure(fat_cantor())
    assert abs(value - 0.5) <= err <= 1e-12
    value, err = cantor_measure(fat_cantor(1 / 6, 1 / 6))
    assert abs(value - 0.75) <= max(err, 1e-15)


def test_stage1_and_examples():
    cs = fat_cantor()
    assert cs.stage(1).pairs() == [(0.0, 0.375), (0.625, 1.0)]
    assert cs.stage(0).pairs() == [(0.0, 1.0)]
    assert cs.stage(2).lengths.tolist() == [0.15625] * 4
    assert cantor_window_measure(cs, 0.0, 0.375, 1) == (0.25, 0.25)
    assert contains(cs, 0.375, 5) is Membership.IN
    assert contains(cs, 0.5, 1) is Membership.OUT


@pytest.mark.parametrize("rule, msg", [
    (GeometricAlpha(0.5, 0.25), "summability"),
    (GeometricAlpha(0.25, 0.5), "summability|infeasible"),
    (PrefixAlpha((1.5,)), "infeasible"),
])
def test_bad_rules(rule, msg):
    with pytest.raises(ValueError, match=msg):
        CantorSet(rule, max_stage=1 if isinstance(rule, PrefixAlpha) else 10)


def test_prefix_without_tail_refuses_limit_measure():
    cs = CantorSet(PrefixAlpha((0.25, 0.0625)), max_stage=2)
    assert cs.stage_measure(2) == 0.625
    with pytest.raises(ValueError, match="tail"):
        cs.measure()


@given(st.integers(1, 12), st.data())
def test_window_identity(n, data):
    cs = fat_cantor()
    k = data.draw(st.integers(0, 2**n - 1))
    iv = cs.stage(n)
    for s in (n, min(n + 4, cs.max_stage)):
        lo, hi = cs.window_measure(iv.lo[k], iv.hi[k], s)
        assert lo == hi == pytest.approx(0.5 / 2**n, abs=1e-15)


@given(st.floats(-0.5, 1.5), st.floats(0, 1), st.integers(1, 14))
def test_window_bracket_contains_finer_stage(u, w, stage):
    cs = fat_cantor()
    v = u + w
    lo, hi = cs.window_measure(u, v, stage)
    flo, fhi = cs.window_measure(u, v, 20)
    assert lo <= flo + 1e-15 and fhi <= hi + 1e-15
    est, clo, chi = cs.cumulative(v, stage)
    assert clo <= est <= chi


@given(st.integers(0, 12))
def test_nesting(n):
    cs = fat_cantor()
    outer, inner = cs.stage(n), cs.stage(n + 1)
    assert intersect(outer, inner) == inner


def test_endpoints_are_members():
    cs = fat_cantor()
    assert all(contains(cs, float(e), 20) is Membership.IN for e in stage_endpoints(cs, 4))


# --- planar wrappers and JSON --------------------------------------------------


def test_product_and_radial():
    cs = fat_cantor()
    P = ProductSet(cs, cs, 1)
    pts = np.array([[0.1, 0.9], [0.5, 0.1], [0.5, 0.5]])
    assert P.contains(pts).tolist() == [True, False, False]
    assert P.distance(pts)[2] == pytest.approx(np.hypot(0.125, 0.125))
    R = RadialSet(cs, 1)
    assert R.contains(np.array([[0.6, 0.8], [0.3, 0.4]])).tolist() == [True, False]


@pytest.mark.parametrize("s", [
    make_interval_set([(0, 1), (2, 2)]),
    fat_cantor(),
    CantorSet(PrefixAlpha((0.25, 0.0625), GeometricAlpha(0.25, 0.25)), max_stage=6),
])
def test_json_round_trip(s):
    assert parse_set(set_to_json(s)) == s


def test_parse_rejects_unknown():
    with pytest.raises(ValueError):
        parse_set({"kind": "blob"})
