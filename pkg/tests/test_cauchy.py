import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from altfix import (
    ExtractionError,
    ParameterError,
    SequencePrefix,
    extract_rank_sequences,
    geometric_prefix,
    harmonic_prefix,
    is_cauchy,
    is_semi_cauchy,
    verify_prop1_trends,
)


def rank_oracle(x, eta, J):
    """Literal double loop: m(j) = least m >= j having some n > m with |x_m - x_n| > eta."""
    N = len(x) - 1
    ms, ns = [], []
    for j in range(J + 1):
        found = None
        for m in range(j, N + 1):
            for n in range(m + 1, N + 1):
                if abs(x[m] - x[n]) > eta:
                    found = (m, n)
                    break
            if found:
                break
        if found is None:
            return ms, ns, j
        ms.append(found[0])
        ns.append(found[1])
    return ms, ns, None


def test_semi_cauchy_examples():
    assert is_semi_cauchy(harmonic_prefix(10_000), 100, 1e-3)["passed"]
    assert is_semi_cauchy(SequencePrefix(np.zeros(20)), 5, 0.0)["passed"]
    osc = SequencePrefix([(-1) ** n for n in range(50)])
    rep = is_semi_cauchy(osc, 5, 0.1)
    assert not rep["passed"] and rep["tail_max_rho"] == 2
    with pytest.raises(ParameterError):
        is_semi_cauchy(osc, 0, 0.1)


def test_cauchy_examples():
    g = geometric_prefix(60)
    assert is_cauchy(g, 10, 1e-12)["passed"]
    h = harmonic_prefix(10_000)
    rep = is_cauchy(h, 10_001, 1.0)
    assert not rep["passed"]
    m, n = rep["witness"]
    assert abs(h.d(m, n) - rep["max_pair_distance"]) == 0
    with pytest.raises(ParameterError):
        is_cauchy(g, 1, 0.1)


def test_prefix_needs_three_points():
    with pytest.raises(ParameterError):
        SequencePrefix([0.0, 1.0])


def test_harmonic_ranks_first_values():
    res = extract_rank_sequences(harmonic_prefix(10_000), 1.0, 50)
    assert (res.m[0], res.n[0]) == (0, 2)
    assert res.alpha[0] == 1.5 and res.beta[0] == 1.0
    assert np.all(res.flags_above) and np.all(res.flags_gap) and np.all(res.squeeze())


def test_harmonic_ranks_match_oracle():
    seq = harmonic_prefix(2000)
    res = extract_rank_sequences(seq, 1.0, 50)
    ms, ns, fail = rank_oracle(seq.points[:, 0].tolist(), 1.0, 50)
    assert fail is None
    assert res.m.tolist() == ms and res.n.tolist() == ns


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(-20, 20), min_size=3, max_size=40),
       st.sampled_from([0.5, 1.0, 2.5, 7.0]), st.integers(0, 15))
def test_rank_extraction_matches_oracle(values, eta, J):
    x = [float(v) for v in values]
    ms, ns, fail = rank_oracle(x, eta, J)
    if fail is None:
        res = extract_rank_sequences(SequencePrefix(x), eta, J)
        assert res.m.tolist() == ms and res.n.tolist() == ns
        assert np.all(res.flags_above)
        assert np.all(res.alpha > eta)
    else:
        with pytest.raises(ExtractionError) as exc:
            extract_rank_sequences(SequencePrefix(x), eta, J)
        assert exc.value.first_failing_j == fail


def test_extraction_fails_on_cauchy_prefix():
    with pytest.raises(ExtractionError) as exc:
        extract_rank_sequences(geometric_prefix(50), 0.3, 10)
    assert exc.value.first_failing_j == 2


def test_extraction_parameter_errors():
    with pytest.raises(ParameterError):
        extract_rank_sequences(harmonic_prefix(10), 0.0, 1)
    with pytest.raises(ParameterError):
        extract_rank_sequences(harmonic_prefix(10), 1.0, -1)


def test_j_eta_and_flags_gap():
    res = extract_rank_sequences(harmonic_prefix(10_000), 1.0, 50)
    # every rho_k = 1/(k+1) < 1 for k >= 1, rho_0 = 1 is not below eta
    assert res.j_eta == 1
    late = np.arange(res.J + 1) >= res.j_eta
    assert np.all((res.n - res.m)[late] >= 2)
    assert np.all(res.beta[late] <= 1.0)


def test_trends_on_harmonic():
    res = extract_rank_sequences(harmonic_prefix(10_000), 1.0, 50)
    rep = verify_prop1_trends(res, 0.5, 5e-2)
    assert rep["strict_above_eta"] and rep["alpha01_within_rho"]
    assert rep["passed"]
    with pytest.raises(ParameterError):
        verify_prop1_trends(extract_rank_sequences(harmonic_prefix(100), 1.0, 3))


def test_rank_csv(tmp_path):
    res = extract_rank_sequences(harmonic_prefix(200), 1.0, 5)
    path = tmp_path / "r.csv"
    res.write_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["j", "m", "n", "alpha", "beta", "alpha01", "alpha10", "alpha11"]
    assert rows[1][:5] == ["0", "0", "2", "1.5", "1"]
    assert len(rows) == 7
