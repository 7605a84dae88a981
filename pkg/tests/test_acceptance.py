"""Acceptance gate: one test per criterion, each printing a single pass/fail line."""
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from lipone.constructors import MeasurePrimitive
from lipone.density import is_quasi_dense, quasi_dense_core
from lipone.lipest import GridFunction, llip_estimate
from lipone.realsets import CantorSet, GeometricAlpha, cantor_measure, cantor_window_measure, make_interval_set
from lipone.suites import ExperimentConfig, run_suite
from oracles import brute

_RESULTS = {}


def suite(name):
    if name not in _RESULTS:
        _RESULTS[name] = run_suite(name, ExperimentConfig("verify", name))
    return _RESULTS[name]


def report(number, ok, seconds, limit, detail):
    ok = bool(ok) and (limit is None or seconds < limit)
    bound = "no time limit" if limit is None else f"< {limit} s"
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}: {detail} [{seconds:.2f} s, {bound}]"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def quarter_cantor():
    return CantorSet(GeometricAlpha(0.25, 0.25), max_stage=20)


def test_criterion_01_cantor_measure():
    t0 = time.perf_counter()
    cs = quarter_cantor()
    value, err = cantor_measure(cs)
    stage20 = cs.stage(20).measure()
    exact20 = 1 - sum(Fraction(2 ** (j - 1), 4**j) for j in range(1, 21))
    dt = time.perf_counter() - t0
    ok = (abs(value - 0.5) <= err <= 1e-12 and exact20 == Fraction(1, 2) + Fraction(1, 2**21)
          and abs(stage20 - float(exact20)) <= 1e-12)
    assert report(1, ok, dt, 1, f"measure {value!r} (err {err:.1e}), stage-20 measure {stage20!r}")


def test_criterion_02_window_identity():
    t0 = time.perf_counter()
    cs = quarter_cantor()
    worst_width = worst_dev = 0.0
    for n in range(1, 11):
        iv = cs.stage(n)
        for k in range(2**n):
            lo, hi = cantor_window_measure(cs, float(iv.lo[k]), float(iv.hi[k]), n)
            worst_width = max(worst_width, hi - lo)
            worst_dev = max(worst_dev, abs(lo - 0.5 / 2**n))
    dt = time.perf_counter() - t0
    ok = worst_width == 0.0 and worst_dev <= 1e-12
    assert report(2, ok, dt, 5, f"bracket width {worst_width!r}, max deviation {worst_dev!r}")


def test_criterion_03_cantor_primitive():
    res = suite("thm4.1")
    s, c = res.summary, res.criteria
    ok = (c["global_lipschitz_le_1"] and c["witness_llip_ge_1_minus_tol"] and c["far_llip_zero"]
          and c["outside_smallest_radius_llip_zero"] and s["n_witness"] > 0)
    detail = (f"global lip {s['global_lip']!r}, witness llip min {s['witness_llip_min']!r} over {s['n_witness']}, "
              f"{s['n_far']} points beyond the largest radius, max llip {s['outside_smallest_radius_llip_max']!r} "
              f"over {s['n_outside_smallest_radius']} points beyond the smallest")
    assert report(3, ok, res.seconds, 60, detail)


def test_criterion_04_counterexample():
    t0 = time.perf_counter()
    F = make_interval_set([(0, 0), (1, 2)])
    rep = is_quasi_dense(F, [0.0, 1.0, 1.5, 2.0], [0.5, 0.25, 0.125])
    f = GridFunction.sample(MeasurePrimitive(F, 0.0).evaluate, [(-1, 3)], 2.0**-7)
    est = llip_estimate(f, (128,), [0.5, 0.25, 0.125])
    dt = time.perf_counter() - t0
    ok = rep.verdict == "refuted" and rep.witness == (0.0, 0.5) and est.llip_final == 0.0
    assert report(4, ok, dt, 1, f"witness {rep.witness}, llip at 0 = {est.llip_final!r}")


def test_criterion_05_ordering_everywhere():
    names = ["thm4.1", "thm4.2-counterexample", "thm6.1-tent", "final-example"]
    flags = {n: suite(n).criteria["ordering"] for n in names}
    dt = sum(_RESULTS[n].seconds for n in names)
    assert report(5, all(flags.values()), dt, None,
                  "lip <= biglip <= llip exactly in " + ", ".join(flags))


def test_criterion_06_brute_force_equivalence():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    mismatches = 0
    for trial in range(10):
        if trial % 2:
            f = GridFunction((0.0, 0.0), (0.125, 0.125), rng.normal(size=(5, 5)))
        else:
            f = GridFunction((0.0,), (0.125,), rng.normal(size=int(rng.integers(5, 26))))
        x = tuple(int(rng.integers(0, n)) for n in f.shape)
        radii = [0.5, 0.25]
        est = llip_estimate(f, x, radii)
        ref = brute(f, x, radii)
        mismatches += est.llip_at_r.tolist() != ref[:, 0].tolist()
        mismatches += est.big_lip_at_r.tolist() != ref[:, 1].tolist()
        mismatches += est.little_lip_at_r.tolist() != ref[:, 2].tolist()
    dt = time.perf_counter() - t0
    assert report(6, mismatches == 0, dt, 1, f"{mismatches} mismatching estimator arrays over 10 grids")


def test_criterion_07_tent_sums():
    res = suite("thm6.1-tent")
    s = res.summary
    detail = (f"deficits {s['deficits']} at budgets {s['budgets']}, pair excess {s['max_pair_excess']:.2e}, "
              f"inside llip min {s['inside_llip_min']!r} ({s['n_inside']} pts), "
              f"outside llip max {s['outside_llip_max']!r} ({s['n_outside']} pts)")
    c = res.criteria
    ok = (c["deficit_strictly_decreasing"] and c["tent_sum_1_lipschitz"] and c["inside_llip_ge_1_minus_tol"]
          and c["outside_llip_le_tol"])
    assert report(7, ok, res.seconds, 120, detail)


def test_criterion_08_radial_example():
    res = suite("final-example")
    s = res.summary
    c = res.criteria
    ok = c["rotational_invariance"] and c["gap_llip_le_tol"] and c["endpoint_llip_ge_0.9"]
    detail = (f"f(0.6,0.8)==f(1,0): {c['rotational_invariance']}, gap llip max {s['gap_llip_max']!r} "
              f"({s['n_gap_points']} pts), endpoint llip min {s['endpoint_llip_min']!r} "
              f"({s['n_endpoint_points']} pts)")
    assert report(8, ok, res.seconds, 180, detail)


def test_criterion_09_cantor_square_connectivity():
    res = suite("sec5-cantor-square")
    rows = res.rows
    ok = (res.criteria["cantor_square_complement_connected"] and res.criteria["annulus_two_components"]
          and [r[0] for r in rows] == list(range(1, 9)) and all(r[1] == 2 ** (r[0] + 3) for r in rows))
    detail = (f"components per stage {[r[2] for r in rows]}, doubled {[r[3] for r in rows]}, "
              f"annulus {res.summary['annulus']['components']}")
    assert report(9, ok, res.seconds, 30, detail)


def test_criterion_10_quasi_dense_core():
    t0 = time.perf_counter()
    A = make_interval_set([(0, 0), (1, 2), (3, 3)])
    B = quasi_dense_core(A)
    ok = B.pairs() == [(1.0, 2.0)] and B.measure() == A.measure() and quasi_dense_core(B) == B
    dt = time.perf_counter() - t0
    assert report(10, ok, dt, 1, f"core {B.pairs()}, measure {B.measure()!r} == {A.measure()!r}")


@pytest.fixture(scope="module", autouse=True)
def _order_lines():
    yield
    ACCEPTANCE_LINES.sort(key=lambda line: int(line.split("criterion")[1].split(":")[0]))
