import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from altfix import (
    AlteringFunction,
    BoxSpace,
    DomainError,
    FiniteSpace,
    ParameterError,
    SelfMap,
    apriori_error_bound,
    classify_picard,
    geometric_rate,
    iterations_needed,
    picard_orbit,
    real_line,
)
from altfix.iteration import cluster_points

BOX = BoxSpace(-10, 10)


def test_geometric_rate_values():
    assert geometric_rate(0.5, 0.2) == 0.875
    assert geometric_rate(0.3, 0) == 0.3
    assert geometric_rate(0, 0.25) == pytest.approx(1 / 3, abs=1e-16)
    for a, b in [(0.5, 0.25), (-0.1, 0), (0, -0.1), (1, 0)]:
        with pytest.raises(ParameterError):
            geometric_rate(a, b)


@given(st.floats(0, 1), st.floats(0, 0.5))
def test_geometric_rate_below_one(a, b):
    if a + 2 * b < 1:
        assert 0 <= geometric_rate(a, b) < 1


def test_apriori_bound_values():
    assert apriori_error_bound(0.5, 1, 10) == 2 ** -9
    assert apriori_error_bound(0.2, 3, 0) == pytest.approx(3 / 0.8)
    assert apriori_error_bound(0.7, 0, 17) == 0
    with pytest.raises(ParameterError):
        apriori_error_bound(1.0, 1, 1)


def test_iterations_needed_examples():
    assert iterations_needed(0.5, 1, 1e-6) == 21
    assert iterations_needed(0.5, 1, 5) == 0
    n = 0
    while 0.9 ** n / 0.1 > 1e-3:
        n += 1
    assert iterations_needed(0.9, 1, 1e-3) == n


@settings(max_examples=200)
@given(st.floats(0.01, 0.99), st.floats(1e-6, 1e6), st.floats(1e-12, 1e3))
def test_iterations_needed_is_minimal(lam, d0, eps):
    n = iterations_needed(lam, d0, eps)
    assert apriori_error_bound(lam, d0, n) <= eps
    if n >= 1:
        assert apriori_error_bound(lam, d0, n - 1) > eps


def test_orbit_converges_to_fixed_point():
    T = SelfMap.from_expression("x/2 + 1")
    tr = picard_orbit(BOX, T, 0.0, tol=1e-9, rate=0.5)
    assert tr.stop_reason == "converged"
    assert tr.limit[0] == pytest.approx(2, abs=1e-8)
    assert len(tr.rho) == len(tr.orbit) - 1
    assert np.all(np.diff(tr.rho) < 0)
    assert np.all(np.diff(tr.bound_curve) < 0)
    err = np.abs(tr.orbit[:, 0] - 2.0)
    assert np.all(err <= tr.bound_curve + 1e-9)


def test_orbit_fixed_point_hit():
    tr = picard_orbit(BOX, SelfMap.from_expression("x/2 + 1"), 2.0)
    assert tr.stop_reason == "fixed-point-hit"
    assert tr.steps == 1 and tr.rho[-1] <= 1e-12
    assert tr.converged


def test_orbit_diverges():
    tr = picard_orbit(real_line(), SelfMap.from_expression("2*x"), 1.0)
    assert tr.stop_reason == "diverged" and not tr.converged
    assert tr.limit is None
    tr = picard_orbit(BOX, SelfMap.from_expression("2*x"), 1.0)
    assert tr.stop_reason == "diverged" and "left the carrier" in tr.message
    assert np.all(np.abs(tr.orbit) <= 10)


def test_orbit_max_iters_and_bad_inputs():
    tr = picard_orbit(BOX, SelfMap.from_expression("-x"), 1.0, max_iters=7)
    assert tr.stop_reason == "max-iters" and tr.steps == 7
    with pytest.raises(DomainError):
        picard_orbit(BOX, SelfMap.from_expression("x/2"), 11.0)
    with pytest.raises(ParameterError):
        picard_orbit(BOX, SelfMap.from_expression("x/2"), 1.0, max_iters=0)
    with pytest.raises(ParameterError):
        picard_orbit(BOX, SelfMap.from_expression("x/2"), 1.0, tol=0)


def test_sigma_tracks_altering_function():
    tr = picard_orbit(BoxSpace(0, 1), SelfMap.from_expression("x/2"), 1.0,
                      phi=AlteringFunction.power(2))
    assert np.allclose(tr.sigma, tr.rho ** 2)
    assert picard_orbit(BoxSpace(0, 1), SelfMap.from_expression("x/2"), 1.0).sigma is None


def test_orbit_on_finite_space():
    fs = FiniteSpace([[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    tr = picard_orbit(fs, SelfMap.from_table([1, 2, 2]), "p0")
    assert tr.stop_reason == "fixed-point-hit"
    assert fs.point_key(tr.limit) == "p2"


def test_trace_csv(tmp_path):
    tr = picard_orbit(BOX, SelfMap.from_expression("x/2 + 1"), 0.0, rate=0.5,
                      phi=AlteringFunction.identity())
    path = tmp_path / "t.csv"
    tr.write_csv(path, BOX)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["step", "x", "rho", "sigma", "bound"]
    assert len(rows) == len(tr.orbit) + 1
    assert rows[1] == ["0", "0", "1", "1", "2"]
    assert float(rows[5][1]) == tr.orbit[4][0]
    assert rows[-1][2] == ""


def test_classify_examples():
    T = SelfMap.from_expression("x/2")
    res = classify_picard(real_line(), T, [-5, 0, 7])
    assert res.verdict == "globally-strong-picard" and res.distinct_limits == 1
    res = classify_picard(real_line(), SelfMap.from_expression("x"), [1, 2])
    assert res.verdict == "strong-picard" and res.distinct_limits == 2
    res = classify_picard(real_line(), SelfMap.from_expression("2*x"), [1])
    assert res.verdict == "inconclusive" and "diverged" in res.detail
    with pytest.raises(ParameterError):
        classify_picard(real_line(), T, [])


def test_classify_picard_but_not_strong():
    # halving until the iterate drops below 1e-9, where T jumps back to 1:
    # the orbit settles (rho <= tol) at a point that T does not fix
    T = SelfMap.from_callable(lambda X: np.where(X > 1e-9, X / 2, 1.0))
    res = classify_picard(real_line(), T, [1.0])
    assert res.verdict == "picard"


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=1, max_size=12), st.randoms())
def test_clusters_order_independent(points, rnd):
    sp = BoxSpace(-1, 1)
    P = np.array(points)[:, None]
    shuffled = list(P)
    rnd.shuffle(shuffled)

    def as_sets(pts, clusters):
        return sorted(sorted(float(pts[i][0]) for i in c) for c in clusters)

    a = as_sets(list(P), cluster_points(sp, list(P), 0.1))
    b = as_sets(shuffled, cluster_points(sp, shuffled, 0.1))
    assert a == b
