import dataclasses
import io
import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy import stats

from hypa import (PathCorpus, build_korder, classify, compute_hypa, expected_degrees, fit_xi, hypa_score,
                  hypa_scores, hypergeom_logpmf, init_xi, sample_ensemble)
from hypa import ensemble
from hypa.ensemble import ConsistencyError, InfeasibleError, XiMatrix, degree_error, empirical_cdf, score_graph

from oracles import hypergeom_cdf_exact, hypergeom_pmf_exact


@st.composite
def urn(draw, max_total=60):
    total = draw(st.integers(1, max_total))
    xi_vw = draw(st.integers(0, total))
    m = draw(st.integers(0, total))
    return xi_vw, total, m


@st.composite
def real_urn(draw):
    total = draw(st.floats(2.0, 5000.0))
    xi_vw = draw(st.floats(0.0, 1.0)) * total
    m = draw(st.integers(0, int(min(total, 400))))
    return xi_vw, total, m


def test_logpmf_small_example():
    assert hypergeom_logpmf(4, 10, 5, 2) == pytest.approx(math.log(10 / 21), rel=1e-12)


@given(urn())
def test_pmf_matches_factorials(args):
    xi_vw, total, m = args
    for f in range(0, m + 1):
        exact = hypergeom_pmf_exact(xi_vw, total, m, f)
        got = hypergeom_logpmf(xi_vw, total, m, f)
        if exact == 0:
            assert got == -math.inf
        else:
            assert math.exp(got) == pytest.approx(float(exact), rel=1e-9)


@given(urn())
def test_cdf_matches_factorials(args):
    xi_vw, total, m = args
    f = np.arange(m + 1)
    got = hypa_scores(np.full(m + 1, float(xi_vw)), float(total), m, f)
    for x in range(m + 1):
        assert got[x] == pytest.approx(float(hypergeom_cdf_exact(xi_vw, total, m, x)), rel=1e-9, abs=1e-300)
    assert got[-1] == pytest.approx(1.0, abs=1e-9)


@given(urn(max_total=400))
def test_pmf_sums_to_one_for_integer_capacities(args):
    xi_vw, total, m = args
    lo, hi = ensemble._support(xi_vw, total, m)
    s = math.fsum(math.exp(hypergeom_logpmf(xi_vw, total, m, f)) for f in range(int(lo), int(hi) + 1))
    assert s == pytest.approx(1.0, rel=1e-9)


@given(real_urn())
def test_real_capacity_mass_is_close_to_one_when_m_is_small(args):
    # real capacities truncate the support at floor(xi) and at m - floor(total - xi);
    # the lost mass is about the first dropped term on either side
    xi_vw, total, m = args
    assume(m <= 0.05 * total)
    lo, hi = ensemble._support(xi_vw, total, m)
    s = math.fsum(math.exp(hypergeom_logpmf(xi_vw, total, m, f)) for f in range(int(lo), int(hi) + 1))
    r = m / (total - m)
    dropped = r ** (math.floor(xi_vw) + 1) + r ** (math.floor(total - xi_vw) + 1)
    assert abs(1.0 - s) <= 2 * dropped + 1e-9


@given(real_urn())
def test_cdf_is_monotone_within_unit_interval(args):
    xi_vw, total, m = args
    f = np.arange(m + 1)
    cdf = hypa_scores(np.full(m + 1, xi_vw), total, m, f)
    assert np.all(np.diff(cdf) >= -1e-9)
    assert np.all((cdf >= 0) & (cdf <= 1))


def test_cdf_matches_scipy_for_large_integer_urns():
    rng = np.random.default_rng(5)
    for _ in range(20):
        total = int(rng.integers(10_000, 5_000_000))
        xi_vw = int(rng.integers(1, total // 10))
        m = int(rng.integers(1, 20_000))
        f = int(rng.integers(0, min(m, xi_vw) + 1))
        ref = stats.hypergeom(total, xi_vw, m).cdf(f)
        assert hypa_score(xi_vw, total, m, f) == pytest.approx(ref, rel=1e-7, abs=1e-12)


def test_chunked_evaluation_matches_single_pass(monkeypatch):
    rng = np.random.default_rng(1)
    total = 5000.0
    xv = rng.uniform(1, 400, size=50)
    f = rng.integers(0, 200, size=50)
    whole = hypa_scores(xv, total, 300, np.minimum(f, 300))
    monkeypatch.setattr(ensemble, "_CHUNK_TERMS", 64)
    assert np.allclose(hypa_scores(xv, total, 300, np.minimum(f, 300)), whole, rtol=1e-12, atol=0)


@pytest.mark.parametrize("bad", [(-1, 10, 2, 0), (11, 10, 2, 0), (3, 10, 11, 0), (3, 10, 2, 3), (3, 0, 0, 0)])
def test_domain_errors(bad):
    with pytest.raises(ValueError):
        hypergeom_logpmf(*bad)


def test_toy_xi_initialisation(toy_corpus):
    g = build_korder(toy_corpus, 2)
    xi = init_xi(g)
    lab = toy_corpus.index
    ax = g.gram_index[(lab["A"], lab["X"])]
    xc = g.gram_index[(lab["X"], lab["C"])]
    assert xi.dense()[ax, xc] == 30 * 135 == 4050
    assert xi.M == 235 ** 2


def test_toy_fit_matches_degrees(toy_corpus):
    g = build_korder(toy_corpus, 2)
    xi = fit_xi(init_xi(g), tolerance=1e-2)
    e_out, e_in = expected_degrees(xi)
    nz = g.f_out > 0
    assert np.max(np.abs(e_out[nz] - g.f_out[nz]) / g.f_out[nz]) <= 1e-2
    assert xi.converged and xi.iterations == 0


def test_toy_scores(toy_corpus):
    t = compute_hypa(toy_corpus, 2)
    scores = t.by_path()
    assert scores[("A", "X", "C")] > 0.5
    assert scores[("B", "X", "C")] < 0.5
    assert len(t) == 4
    assert t.meta["iterations"] == 0


def test_toy_monte_carlo(toy_corpus):
    t = compute_hypa(toy_corpus, 2)
    samples = sample_ensemble(t.xi, n_samples=20_000, seed=0)
    emp = empirical_cdf(samples, t.freq)
    assert np.max(np.abs(emp - t.hypa)) <= 0.02


def _random_korder(seed, k):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 12))
    adj = rng.random((n, n)) < 0.4
    seqs = []
    for _ in range(int(rng.integers(20, 200))):
        u = int(rng.integers(n))
        walk = [str(u)]
        for _ in range(int(rng.integers(1, 8))):
            nbrs = np.flatnonzero(adj[u])
            if nbrs.size == 0:
                break
            u = int(rng.choice(nbrs))
            walk.append(str(u))
        seqs.append(walk)
    return build_korder(PathCorpus.from_sequences(seqs), k)


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([1, 2, 3]))
def test_fit_converges_and_preserves_total(seed, k):
    g = _random_korder(seed, k)
    assume(g.m > 0)
    xi0 = init_xi(g)
    xi = fit_xi(xi0)
    assert xi.converged
    assert xi.max_drift <= 1e-6
    assert xi.total == pytest.approx(xi0.total, rel=1e-6)
    assert degree_error(xi) <= xi.rmse + 1e-12


@given(st.integers(0, 2 ** 32 - 1), st.floats(0.01, 100.0))
def test_expected_degrees_are_scale_invariant(seed, c):
    g = _random_korder(seed, 2)
    assume(g.m > 0)
    xi = init_xi(g)
    a = expected_degrees(xi)
    b = expected_degrees(dataclasses.replace(xi, values=xi.values * c))
    assert np.allclose(a[0], b[0]) and np.allclose(a[1], b[1])


def test_expected_degree_totals_equal_m():
    g = _random_korder(7, 2)
    e_out, e_in = expected_degrees(init_xi(g))
    assert e_out.sum() == pytest.approx(g.m) and e_in.sum() == pytest.approx(g.m)


def test_fit_rejects_infeasible_constraints():
    xi = XiMatrix(2, 3, np.array([0]), np.array([1]), np.array([1.0]), 2, 4.0,
                  np.array([1.0, 0.0, 1.0]), np.array([0.0, 2.0, 0.0]))
    with pytest.raises(InfeasibleError):
        fit_xi(xi, tolerance=1e-3)


def test_fit_rejects_bad_tolerance(toy_corpus):
    with pytest.raises(ValueError):
        fit_xi(init_xi(build_korder(toy_corpus, 2)), tolerance=0)


def test_init_rejects_empty_graph():
    g = build_korder(PathCorpus.from_sequences([["A"]]), 1)
    with pytest.raises(ValueError):
        init_xi(g)


def test_observed_edge_with_zero_capacity_is_an_error(toy_corpus, monkeypatch):
    g = build_korder(toy_corpus, 2)
    real_fit = ensemble.fit_xi

    def zeroing_fit(xi, *args, **kwargs):
        out = real_fit(xi, *args, **kwargs)
        return dataclasses.replace(out, values=np.zeros_like(out.values))

    monkeypatch.setattr(ensemble, "fit_xi", zeroing_fit)
    with pytest.raises(ConsistencyError):
        score_graph(g)


def test_classify_rules(toy_corpus):
    t = compute_hypa(toy_corpus, 2)
    labelled = classify(t, 0.1)
    by_path = dict(zip((tuple(toy_corpus.labels[v] for v in p) for p in t.paths()), labelled.labels))
    assert by_path[("A", "X", "C")] == "over" and by_path[("B", "X", "D")] == "over"
    assert by_path[("B", "X", "C")] == "under" and by_path[("A", "X", "D")] == "under"
    # with alpha > 0.5 a score can pass both thresholds; under wins
    wide = classify(t, 0.99)
    assert all(lab == "under" for lab, h in zip(wide.labels, t.hypa) if h < 0.99)
    with pytest.raises(ValueError):
        classify(t, 0)


def test_classify_leaves_unscored_rows():
    t = compute_hypa(PathCorpus.from_sequences([["A", "B", "C"]]), 2)
    t = dataclasses.replace(t, labels=np.array(["unscored"], dtype=object))
    assert classify(t, 0.5).labels.tolist() == ["unscored"]


def test_score_csv(toy_corpus):
    buf = io.StringIO()
    compute_hypa(toy_corpus, 2, alpha=0.1).write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "source,target,frequency,xi,hypa,label"
    assert len(lines) == 5
    assert "A|X,X|C,30,4050," in buf.getvalue()


@pytest.mark.parametrize("xi_vw, total, m", [(3000, 100000, 40000), (50000, 100000, 60000), (20, 100000, 90000)])
def test_far_tails_match_scipy(xi_vw, total, m):
    """Deep lower tails and saturated upper tails survive the summation window."""
    from scipy.stats import hypergeom
    ref = hypergeom(total, xi_vw, m)
    lo, hi = int(ref.support()[0]), int(ref.support()[1])
    mean, sd = ref.mean(), ref.std()
    fs = np.unique(np.clip(np.rint(mean + sd * np.array([-30, -12, -3, 0, 3, 12, 80])), lo, hi).astype(int))
    got = hypa_scores(np.full(fs.size, float(xi_vw)), total, m, fs)
    want = ref.cdf(fs)
    keep = want > 1e-290
    assert np.allclose(got[keep], want[keep], rtol=1e-8, atol=0)
