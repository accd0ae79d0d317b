import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from csbmprop import rng as rngmod
from csbmprop.csbm import (AttributedGraph, CsbmParams, GaussianAttrs, LaplaceAttrs, NefAttrs, _tri_rows,
                           degree_stats, gaussian_by_separation, iter_edges, laplace_by_norm, load_graph,
                           sample_attributes, sample_csbm, sample_labels, save_graph)


def assert_simple_symmetric(g: AttributedGraph):
    A = g.adjacency()
    assert (A != A.T).nnz == 0
    assert A.diagonal().sum() == 0
    for v in range(g.n):
        nb = g.neighbors(v)
        assert np.all(np.diff(nb) > 0)


def block_counts(g: AttributedGraph):
    u, v = g.edges()
    same = g.labels[u] == g.labels[v]
    k = int(np.sum(g.labels == 1))
    intra_pairs = k * (k - 1) // 2 + (g.n - k) * (g.n - k - 1) // 2
    inter_pairs = k * (g.n - k)
    return int(same.sum()), int((~same).sum()), intra_pairs, inter_pairs


# ---------------------------------------------------------------- parameters


def test_params_reject_bad_values():
    spec = gaussian_by_separation(1.0, 2)
    with pytest.raises(ValueError):
        CsbmParams(0, 0.1, 0.1, spec)
    with pytest.raises(ValueError):
        CsbmParams(10, 1.5, 0.1, spec)
    with pytest.raises(ValueError):
        CsbmParams(10, 0.1, -0.1, spec)
    with pytest.raises(ValueError):
        LaplaceAttrs([1.0], b=0.0)
    with pytest.raises(ValueError):
        LaplaceAttrs([1.0], b=-2.0)


def test_log_ratio_requires_positive_probabilities():
    spec = gaussian_by_separation(1.0, 2)
    assert CsbmParams(10, 0.2, 0.1, spec).log_ratio == pytest.approx(math.log(2))
    with pytest.raises(ValueError, match="q must be positive"):
        CsbmParams(10, 0.2, 0.0, spec).log_ratio


def test_params_roundtrip_dict():
    for spec in (gaussian_by_separation(0.7, 3), laplace_by_norm(0.4, 3, 2.0),
                 NefAttrs([1, 2], [0, 1], 0.5)):
        p = CsbmParams(50, 0.3, 0.1, spec, 99)
        back = CsbmParams.from_dict(p.to_dict())
        assert back.to_dict() == p.to_dict()


def test_gaussian_by_separation_geometry():
    spec = gaussian_by_separation(0.8, 10)
    assert spec.separation == pytest.approx(0.8, abs=1e-15)
    assert np.allclose((spec.mu + spec.nu) / 2, 0.0)
    assert np.linalg.norm(laplace_by_norm(0.5, 4).mu) == pytest.approx(0.5)


# ---------------------------------------------------------------- sampling


def test_degenerate_two_cliques():
    g = sample_csbm(CsbmParams(4, 1.0, 0.0, gaussian_by_separation(1.0, 2), seed=3))
    u, v = g.edges()
    assert np.all(g.labels[u] == g.labels[v])
    k = int(np.sum(g.labels == 1))
    assert g.num_edges == k * (k - 1) // 2 + (4 - k) * (3 - k) // 2
    assert_simple_symmetric(g)


def test_equal_pq_densities_within_4_sigma():
    n, p = 10_000, 0.01
    g = sample_csbm(CsbmParams(n, p, p, gaussian_by_separation(0.0, 1), seed=11))
    e_in, e_out, pairs_in, pairs_out = block_counts(g)
    for e, pairs in ((e_in, pairs_in), (e_out, pairs_out)):
        sd = math.sqrt(pairs * p * (1 - p))
        assert abs(e - pairs * p) < 4 * sd


def test_fig3_left_mean_degree():
    n = 20_000
    p, q = 2 / math.sqrt(n), 1 / math.sqrt(n)
    g = sample_csbm(CsbmParams(n, p, q, gaussian_by_separation(0.3, 10), seed=5))
    expected = (n - 1) * (p + q) / 2
    edges = expected * n / 2
    # sd of the mean degree from the binomial edge count, plus the label-imbalance term
    sd = 2 * math.sqrt(edges) / n + (p - q) * 0.25
    assert abs(g.degree().mean() - expected) < 4 * sd
    assert_simple_symmetric(g)


def test_edge_counts_over_30_samples():
    n, p, q = 2000, 0.01, 0.004
    z_in, z_out = [], []
    for s in range(30):
        g = sample_csbm(CsbmParams(n, p, q, gaussian_by_separation(0.5, 2), seed=1000 + s))
        assert_simple_symmetric(g)
        e_in, e_out, pin, pout = block_counts(g)
        z_in.append((e_in - pin * p) / math.sqrt(pin * p * (1 - p)))
        z_out.append((e_out - pout * q) / math.sqrt(pout * q * (1 - q)))
    assert max(map(abs, z_in)) < 4 and max(map(abs, z_out)) < 4
    # pooled: the mean of 30 standardized counts has sd 1/sqrt(30)
    assert abs(np.mean(z_in)) < 4 / math.sqrt(30)
    assert abs(np.mean(z_out)) < 4 / math.sqrt(30)


def test_label_balance():
    n = 5000
    ok = sum(abs(int(np.sum(sample_labels(n, s) == 1)) - n / 2) <= 4 * math.sqrt(n) / 2 for s in range(100))
    assert ok >= 95


def test_block_pair_enumeration_is_exact():
    # the triangular index map must visit every pair exactly once
    for k in (2, 3, 7, 50):
        total = k * (k - 1) // 2
        i, j = _tri_rows(np.arange(total), k)
        pairs = set(zip(i.tolist(), j.tolist()))
        assert len(pairs) == total
        assert all(0 <= a < b < k for a, b in pairs)
    g = sample_csbm(CsbmParams(30, 1.0, 1.0, gaussian_by_separation(1.0, 1), seed=0))
    assert g.num_edges == 30 * 29 // 2


def test_small_chunks_give_identical_edges():
    labels = sample_labels(400, 9)
    big = np.concatenate([np.column_stack(c) for c in iter_edges(labels, 0.05, 0.02, 9)])
    small = np.concatenate([np.column_stack(c) for c in iter_edges(labels, 0.05, 0.02, 9, chunk=7)])
    assert np.array_equal(big, small)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 120), p=st.floats(0, 1), q=st.floats(0, 1), seed=st.integers(0, 2**63 - 1))
def test_property_symmetric_simple(n, p, q, seed):
    g = sample_csbm(CsbmParams(n, p, q, gaussian_by_separation(0.5, 2), seed))
    assert_simple_symmetric(g)
    assert set(np.unique(g.labels)) <= {-1, 1}
    assert g.attrs.shape == (n, 2)


def test_seed_determinism_and_topology_independent_of_attributes():
    a = sample_csbm(CsbmParams(800, 0.03, 0.01, gaussian_by_separation(0.5, 10), seed=42))
    b = sample_csbm(CsbmParams(800, 0.03, 0.01, gaussian_by_separation(0.5, 10), seed=42))
    c = sample_csbm(CsbmParams(800, 0.03, 0.01, laplace_by_norm(0.9, 3), seed=42))
    assert np.array_equal(a.indices, b.indices) and np.array_equal(a.attrs, b.attrs)
    assert np.array_equal(a.indices, c.indices) and np.array_equal(a.labels, c.labels)
    d = sample_csbm(CsbmParams(800, 0.03, 0.01, gaussian_by_separation(0.5, 10), seed=43))
    assert not np.array_equal(a.labels, d.labels)


# ---------------------------------------------------------------- attributes


def test_equal_means_carry_no_label_information():
    labels = sample_labels(40_000, 1)
    spec = GaussianAttrs([0.3, -0.2], [0.3, -0.2])
    X = sample_attributes(labels, spec, rngmod.stream(1, rngmod.ATTRIBUTES))
    a, b = X[labels == 1], X[labels == -1]
    sd = math.sqrt(1 / 2 * (1 / len(a) + 1 / len(b)))
    assert np.all(np.abs(a.mean(0) - b.mean(0)) < 4 * sd)


def test_gaussian_class_mean_converges():
    m = 10
    spec = gaussian_by_separation(1.0, m)
    labels = sample_labels(20_000, 2)
    X = sample_attributes(labels, spec, rngmod.stream(2, rngmod.ATTRIBUTES))
    k = int(np.sum(labels == 1))
    err2 = float(np.sum((X[labels == 1].mean(0) - spec.mu) ** 2))
    # m * k * err2 ~ chi-square(m) under entry variance 1/m
    assert m * k * err2 < stats.chi2.ppf(1 - 1e-6, m)
    cov = np.cov(X[labels == 1].T)
    assert np.allclose(cov, np.eye(m) / m, atol=0.01)


def test_laplace_entry_variance():
    labels = sample_labels(200_000, 3)
    X = sample_attributes(labels, LaplaceAttrs([1.0], b=1.0), rngmod.stream(3, rngmod.ATTRIBUTES))
    resid = X[:, 0] - labels
    # the fourth moment of Laplace(0, 1) is 24, so var of the sample variance is (24 - 4) / N
    assert abs(resid.var() - 2.0) < 4 * math.sqrt(20 / len(resid))
    assert abs(X[labels == 1, 0].mean() - 1.0) < 0.02


def test_attribute_errors():
    g = rngmod.stream(0)
    with pytest.raises(ValueError):
        sample_attributes(np.array([1, 0, -1]), gaussian_by_separation(1, 2), g)
    with pytest.raises(ValueError):
        sample_attributes(np.ones((2, 2)), gaussian_by_separation(1, 2), g)
    with pytest.raises(ValueError, match="cannot be sampled"):
        sample_attributes(np.array([1, -1]), NefAttrs([1.0], [0.0], 0.5), g)
    with pytest.raises(ValueError):
        GaussianAttrs([1, 2], [1, 2, 3])


# ---------------------------------------------------------------- degree stats


def _graph(n, edges, labels):
    u, v = zip(*edges) if edges else ((), ())
    return AttributedGraph.from_edges(n, u, v, labels, np.zeros((n, 1)))


def test_degree_stats_two_triangles():
    g = _graph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)], [1, 1, 1, -1, -1, -1])
    deg, frac = degree_stats(g)
    assert deg.tolist() == [2] * 6
    assert frac.tolist() == [1.0] * 6


def test_degree_stats_bipartite_and_isolated():
    g = sample_csbm(CsbmParams(4, 0.0, 1.0, gaussian_by_separation(1, 1), seed=0))
    _, frac = degree_stats(g)
    assert np.all(frac[g.degree() > 0] == 0.0)
    g2 = _graph(3, [(0, 1)], [1, 1, -1])
    deg, frac = degree_stats(g2)
    assert deg[2] == 0 and frac[2] == 0.0


def test_degree_stats_same_class_fraction():
    n, p, q = 10_000, 0.02, 0.01
    g = sample_csbm(CsbmParams(n, p, q, gaussian_by_separation(0.5, 2), seed=8))
    deg, frac = degree_stats(g)
    u, v = g.edges()
    same = np.sum(g.labels[u] == g.labels[v])
    # pooled over all edges: binomial(E, 2/3) proportion
    share = same / len(u)
    assert abs(share - 2 / 3) < 4 * math.sqrt((2 / 3) * (1 / 3) / len(u)) + 2e-3
    assert abs(frac.mean() - 2 / 3) < 0.01


def test_from_edges_validation():
    with pytest.raises(ValueError):
        AttributedGraph.from_edges(3, [0], [0], [1, 1, 1], np.zeros((3, 1)))
    with pytest.raises(ValueError):
        AttributedGraph.from_edges(3, [0, 1], [1, 0], [1, 1, 1], np.zeros((3, 1)))
    with pytest.raises(ValueError):
        AttributedGraph.from_edges(3, [0], [3], [1, 1, 1], np.zeros((3, 1)))
    with pytest.raises(ValueError):
        AttributedGraph.from_edges(3, [0], [1], [1, 0, 1], np.zeros((3, 1)))
    with pytest.raises(IndexError):
        _graph(2, [(0, 1)], [1, -1]).neighbors(2)


# ---------------------------------------------------------------- files


def test_save_load_bit_exact(tmp_path):
    g = sample_csbm(CsbmParams(300, 0.05, 0.02, gaussian_by_separation(0.77, 3), seed=12))
    paths = save_graph(g, tmp_path)
    assert {"header", "edges", "labels", "attrs"} == set(paths)
    h = load_graph(paths["header"])
    assert h.n == g.n
    assert np.array_equal(h.indptr, g.indptr) and np.array_equal(h.indices, g.indices)
    assert np.array_equal(h.labels, g.labels)
    assert np.array_equal(h.attrs, g.attrs)
    assert h.provenance["params"] == g.provenance["params"]
    first = (tmp_path / "graph.edges").read_text().splitlines()[0].split()
    assert int(first[0]) < int(first[1])


def test_load_rejects_foreign_header(tmp_path):
    (tmp_path / "x.json").write_text('{"format": "other"}')
    with pytest.raises(ValueError):
        load_graph(tmp_path / "x.json")
