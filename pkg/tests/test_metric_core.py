import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from altfix import (
    AlteringFunction,
    BoundedDecayFunction,
    BoxSpace,
    ComparisonFunction,
    DomainError,
    FiniteSpace,
    ParameterError,
    SelfMap,
    SymmetricE,
    distance,
    m_functionals,
    real_line,
    symmetric_e,
    validate_altering,
    validate_comparison,
    validate_metric_axioms,
)
from altfix._numeric import make_rng
from altfix.metric_core import default_grid, right_limsup, validate_decay

BROKEN = [[0, 1, 5], [1, 0, 1], [5, 1, 0]]


# --- spaces -----------------------------------------------------------------

def test_box_distances():
    sp = BoxSpace([0, 0], [10, 10])
    assert distance(sp, [0, 0], [3, 4]) == 5
    assert distance(BoxSpace([0, 0], [10, 10], "max"), [0, 0], [3, 4]) == 4
    assert distance(BoxSpace([0, 0], [10, 10], "taxicab"), [0, 0], [3, 4]) == 7
    assert distance(real_line(), -2, 3) == 5


def test_box_rejects_foreign_points():
    sp = BoxSpace(-1, 1)
    with pytest.raises(DomainError):
        distance(sp, 0, 2)
    with pytest.raises(DomainError):
        real_line().sample(3, make_rng(0))


def test_finite_space_labels_and_indices():
    sp = FiniteSpace(BROKEN, labels=["a", "b", "c"])
    assert distance(sp, "a", "c") == 5
    assert distance(sp, 0, 2) == 5
    with pytest.raises(DomainError):
        distance(sp, "z", "a")


def test_sample_ball_is_open_and_inside():
    sp = BoxSpace(-10, 10)
    X = sp.sample_ball(9.5, 1.0, 5000, make_rng(1))
    assert X.shape == (5000, 1)
    assert np.all(np.abs(X[:, 0] - 9.5) < 1.0)
    assert np.all(X <= 10)
    fs = FiniteSpace(BROKEN)
    assert list(fs.sample_ball("p1", 1.0)) == [1]
    assert list(fs.sample_ball("p1", 1.5)) == [0, 1, 2]


def test_lattice_covers_corners():
    L = BoxSpace([0, 0], [1, 2]).lattice(9)
    assert L.shape == (9, 2)
    assert [0, 0] in L.tolist() and [1, 2] in L.tolist()


# --- maps ---------------------------------------------------------------------

def test_selfmap_expression_and_domain():
    sp = BoxSpace(-10, 10)
    T = SelfMap.from_expression("x/2 + c", parameters={"c": 1})
    assert np.array_equal(T(sp, 0), [1.0])
    with pytest.raises(DomainError):
        SelfMap.from_expression("2*x")(sp, 8)
    with pytest.raises(ParameterError):
        SelfMap.from_expression("x + q")


def test_selfmap_vector_and_table():
    sp = BoxSpace([-1, -1], [1, 1])
    T = SelfMap.from_expression("(x2, x1/2)", dim=2)
    assert np.array_equal(T(sp, [1, 0.5]), [0.5, 0.5])
    fs = FiniteSpace(BROKEN)
    assert SelfMap.from_table([0, 0, 1])(fs, "p2") == 1


# --- symmetric e and M functionals -------------------------------------------

def test_symmetric_e_and_m_values():
    sp = BoxSpace(0, 1)
    es = SymmetricE(sp, AlteringFunction.power(2))
    T = SelfMap.from_expression("x/2")
    assert symmetric_e(es, 0.0, 0.5) == pytest.approx(0.25)
    m = m_functionals(es, T, 1.0, 0.5)
    # e(x,y) = 0.25; e(x,Tx) = 0.25, e(y,Ty) = 0.0625; e(x,Ty)=0.5625, e(Tx,y)=0
    assert m.M1 == pytest.approx(0.25)
    assert m.M2 == pytest.approx(0.5 * (0.25 + 0.0625))
    assert m.M3 == 0.0
    assert m.M == pytest.approx(0.25)


def test_symmetric_e_need_not_be_triangular():
    # phi(t) = t^2 on the line: e(0,2) = 4 > e(0,1) + e(1,2) = 2
    es = SymmetricE(real_line(), AlteringFunction.power(2))
    assert es(0.0, 2.0) > es(0.0, 1.0) + es(1.0, 2.0)


# --- metric axioms ------------------------------------------------------------

def test_axioms_pass_on_boxes():
    for metric in ("euclid", "max", "taxicab"):
        rep = validate_metric_axioms(BoxSpace([-3, 0, 1], [3, 1, 2], metric), 2000, seed=3)
        assert rep.passed, rep.to_dict()


def test_planted_broken_triangle():
    rep = validate_metric_axioms(FiniteSpace(BROKEN), 100)
    tri = rep.check("triangle")
    assert not tri.passed
    assert tri.witness == ["p0", "p1", "p2"]
    assert rep.extra["evidence"] == "exact"


def test_axiom_failures_of_other_kinds():
    asym = FiniteSpace([[0, 1], [2, 0]])
    assert not validate_metric_axioms(asym, 10).check("symmetry").passed
    pseudo = FiniteSpace([[0, 0], [0, 0]])
    assert not validate_metric_axioms(pseudo, 10).check("sufficiency").passed
    neg = FiniteSpace([[0, -1], [-1, 0]])
    assert not validate_metric_axioms(neg, 10).check("nonnegativity").passed
    refl = FiniteSpace([[1, 1], [1, 0]])
    assert not validate_metric_axioms(refl, 10).check("reflexivity").passed


def _first_triangle_violation(D):
    n = len(D)
    for x, y, z in itertools.product(range(n), repeat=3):
        if D[x][z] > D[x][y] + D[y][z] + 1e-12 + 1e-9 * max(abs(D[x][z]), abs(D[x][y] + D[y][z])):
            return [f"p{x}", f"p{y}", f"p{z}"]
    return None


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6).flatmap(
    lambda n: st.lists(st.lists(st.integers(1, 9), min_size=n, max_size=n), min_size=n, max_size=n)))
def test_triangle_witness_matches_triple_loop(raw):
    n = len(raw)
    D = [[0 if i == j else raw[min(i, j)][max(i, j)] for j in range(n)] for i in range(n)]
    tri = validate_metric_axioms(FiniteSpace(D), 10).check("triangle")
    expected = _first_triangle_violation(D)
    assert tri.passed == (expected is None)
    assert tri.witness == expected


def test_axioms_reproducible():
    sp = BoxSpace([0, 0], [1, 1])
    assert validate_metric_axioms(sp, 500, 7).to_dict() == validate_metric_axioms(sp, 500, 7).to_dict()


# --- altering / comparison / decay functions ---------------------------------

@pytest.mark.parametrize("phi", [AlteringFunction.identity(), AlteringFunction.power(2),
                                 AlteringFunction.log1p(), AlteringFunction.saturating()])
def test_library_altering_functions_validate(phi):
    assert validate_altering(phi).passed


def test_invalid_altering_functions():
    shifted = AlteringFunction.from_expression("t + 1")
    assert not validate_altering(shifted).check("phi(0)=0").passed
    flat = AlteringFunction.from_expression("min(t, 1)")
    assert not validate_altering(flat).check("strictly increasing").passed
    jump = AlteringFunction(lambda t: np.where(t > 1.0, t + 1.0, t), "jump")
    rep = validate_altering(jump, np.linspace(0, 2, 1001))
    assert rep.check("strictly increasing").passed
    assert not rep.check("continuity proxy").passed


def test_comparison_functions():
    assert validate_comparison(ComparisonFunction.constant(0.25)).passed
    assert validate_comparison(ComparisonFunction.reciprocal()).passed
    one = validate_comparison(ComparisonFunction.constant(1.0))
    assert not one.check("strictly subunitary").passed


def test_boyd_wong_detects_right_limit_one():
    # psi(s) = 1 - (s - 1) on (1, 2], smaller elsewhere: strictly below 1, limsup at 1+ is 1
    psi = ComparisonFunction(
        lambda s: np.where((s > 1) & (s <= 2), 1 - (s - 1), 0.5), "notch")
    rep = validate_comparison(psi, np.linspace(0, 3, 301))
    assert rep.check("strictly subunitary").passed
    assert not rep.check("right Boyd-Wong").passed
    assert rep.check("right Boyd-Wong").heuristic
    lim = right_limsup(psi, np.array([1.0]))
    assert max(v[0] for v in lim.values()) > 1 - 1e-3


def test_piecewise_comparison_limsup_jump():
    psi = ComparisonFunction.piecewise([1.0], [0.3, 0.6])
    lim = right_limsup(psi, np.array([0.5, 1.0]))
    smallest = lim[min(lim)]
    assert smallest[0] == pytest.approx(0.3)
    assert smallest[1] == pytest.approx(0.6)


def test_decay_functions():
    for K in (BoundedDecayFunction.linear(2), BoundedDecayFunction.sqrt(1),
              BoundedDecayFunction.saturating(0.5)):
        assert validate_decay(K).passed
    assert not validate_decay(BoundedDecayFunction.from_expression("t + 1")).passed
    assert not validate_decay(BoundedDecayFunction.from_expression("0.1")).passed


def test_default_grid():
    g = default_grid(2.0)
    assert g[0] == 0 and g[-1] == 20 and len(g) == 1001
    assert default_grid(None)[-1] == 10
    assert default_grid(np.inf)[-1] == 1000
