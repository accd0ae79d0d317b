import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from csbmprop.csbm import CsbmParams, gaussian_by_separation, laplace_by_norm, sample_csbm
from csbmprop.experiments import preset
from csbmprop.propagation import Linear, Nonlinear, neighbor_sum, phi, psi_for, scores
from csbmprop.theory import (attributed_info, check_assumptions, classify_regime, concentration_check,
                             effective_linear_snr, error_bound_predictors, error_gap_exact, error_gap_predictor,
                             message_moments, moments_closed_form, moments_monte_carlo, overlapping_index,
                             predicted_linear_snr, predicted_nonlinear_snr, regime_of, snr_1d, snr_empirical,
                             structural_info)


def message_mc(s2, ratio, samples=10**6, seed=0):
    """Independent oracle: class +1 message phi(N(2 s2, 4 s2); log ratio)."""
    g = np.random.default_rng(seed)
    a = g.normal(2 * s2, 2 * math.sqrt(s2), samples)
    z = phi(a, math.log(ratio))
    return z.mean(), z.var()


# ---------------------------------------------------------------- snr / info


def test_snr_1d_examples():
    rho, err = snr_1d(1.0, -1.0, 1.0)
    assert rho == 4.0 and err == pytest.approx(0.158655, abs=1e-6)
    assert snr_1d(0.3, 0.3, 2.0) == (0.0, 0.5)
    with pytest.raises(ValueError):
        snr_1d(1, 0, 0.0)


def test_snr_1d_matches_simulated_map_error():
    g = np.random.default_rng(0)
    n = 10**5
    y = g.choice([-1, 1], n)
    x = y * 1.0 + g.normal(0, 1, n)
    err = np.mean(np.where(x >= 0, 1, -1) != y)
    _, pred = snr_1d(1.0, -1.0, 1.0)
    assert abs(err - pred) < 3 * math.sqrt(pred * (1 - pred) / n)


def test_structural_info():
    assert structural_info(0.02, 0.01) == pytest.approx(1e-4 / 0.03)
    assert structural_info(0.3, 0.3) == 0.0
    assert structural_info(0.01, 0.02) == structural_info(0.02, 0.01)
    with pytest.raises(ValueError):
        structural_info(0.0, 0.0)


@settings(max_examples=200)
@given(p=st.one_of(st.just(0.0), st.floats(1e-100, 1)), q=st.one_of(st.just(0.0), st.floats(1e-100, 1)))
def test_structural_info_symmetric_and_zero_iff_equal(p, q):
    if p + q == 0:
        return
    s = structural_info(p, q)
    assert s == structural_info(q, p) and s >= 0
    assert (s == 0) == (p == q)


def test_attributed_info():
    assert attributed_info(gaussian_by_separation(0.5, 10)) == pytest.approx(math.sqrt(10) * 0.5)
    assert attributed_info(laplace_by_norm(0.5, 4)) == pytest.approx(2.0 * 2 * 0.5)


def test_check_assumptions():
    n = 10_000
    r = check_assumptions(n, 2 / math.sqrt(n), 1 / math.sqrt(n), 1.0)
    assert r.S_over_gap == pytest.approx(1 / 3)
    r = check_assumptions(n, 0.1, 0.1, 1.0)
    assert r.S == 0 and any("S = 0" in s for s in r.notes)
    r = check_assumptions(n, 0.2, 0.1, math.log(n))
    assert any("boundary" in s for s in r.notes)


# ---------------------------------------------------------------- regimes


def test_regime_of_presets():
    n = 100_000
    left = preset("fig3-left").schedule.params(n, 0)
    assert classify_regime(left).regime == "limited"
    middle = preset("fig3-middle").schedule.params(n, 0)
    assert classify_regime(middle).regime == "sufficient"


def test_regime_zero_information():
    r = classify_regime(CsbmParams(1000, 0.02, 0.01, gaussian_by_separation(0.0, 10)))
    assert r.regime == "very-limited" and not r.separable
    assert r.separability_threshold == pytest.approx(math.sqrt(math.log(1000) / (r.S * 1000)))
    with pytest.raises(ValueError):
        classify_regime(CsbmParams(1000, 0.02, 0.02, gaussian_by_separation(1.0, 10)))


@settings(max_examples=200)
@given(n=st.integers(2, 10**7), p=st.floats(1e-6, 1), q=st.floats(1e-6, 1), a=st.floats(0, 100))
def test_regime_total_and_deterministic(n, p, q, a):
    r = regime_of(n, p, q, a)
    assert r in {"very-limited", "limited", "sufficient", "boundary"}
    assert r == regime_of(n, p, q, a)


# ---------------------------------------------------------------- moments


def test_moments_vanish_when_p_equals_q():
    e = moments_closed_form(10, 0.1, 0.1, 0.1)
    assert e.mean == 0.0 and e.variance == 0.0


def test_moments_large_signal_mean_near_threshold():
    e = moments_closed_form(10, 2.5, 0.2, 0.1)
    assert e.mean == pytest.approx(math.log(2), rel=0.01)
    mc_mean, _ = message_mc(25.0, 2.0)
    assert e.mean == pytest.approx(mc_mean, rel=1e-3)


@pytest.mark.parametrize("s2", [0.01, 0.1, 1.0, 4.0])
@pytest.mark.parametrize("ratio", [1.1, 2.0, 5.0])
def test_moments_closed_form_vs_independent_mc(s2, ratio):
    cf = moments_closed_form(10, s2 / 10, ratio * 0.1, 0.1)
    mean, var = message_mc(s2, ratio, seed=int(s2 * 100 + ratio * 10))
    if abs(cf.mean) > 1e-3:
        assert abs(mean - cf.mean) / abs(cf.mean) < 0.02
    assert abs(var - cf.variance) / cf.variance < 0.05
    assert cf.M > cf.N  # upper and lower standardized limits


def test_moments_heterophily_sign_flip():
    a = moments_closed_form(10, 0.1, 0.3, 0.1)
    b = moments_closed_form(10, 0.1, 0.1, 0.3)
    assert b.mean == pytest.approx(-a.mean) and b.variance == pytest.approx(a.variance)


def test_moments_errors_and_mc_scaling():
    with pytest.raises(ValueError):
        moments_closed_form(10, 0.0, 0.2, 0.1)
    small = moments_monte_carlo(10, 0.1, 0.2, 0.1, samples=10**4, seed=1)
    big = moments_monte_carlo(10, 0.1, 0.2, 0.1, samples=4 * 10**4, seed=1)
    assert 1.4 < small.mean_se / big.mean_se < 2.8
    assert moments_monte_carlo(10, 0.1, 0.2, 0.1, samples=10**4, seed=1).mean == small.mean


def test_message_moments_by_separation():
    spec = gaussian_by_separation(0.6, 10)
    mu_sq = float(spec.mu @ spec.mu)
    assert message_moments(10, 0.6, 0.2, 0.1).mean == pytest.approx(moments_closed_form(10, mu_sq, 0.2, 0.1).mean)


# ---------------------------------------------------------------- SNR predictors


def test_snr_empirical():
    with pytest.raises(ValueError):
        snr_empirical([1, 1, 1, -1, -1, -1], [1, 1, 1, -1, -1, -1])
    g = np.random.default_rng(1)
    y = g.choice([-1, 1], 10**6)
    s = y + g.normal(0, 1, y.size)
    assert snr_empirical(s, y) == pytest.approx(4.0, rel=0.02)
    assert snr_empirical(-s, -y) == pytest.approx(snr_empirical(s, y), rel=0.02)


def test_effective_linear_snr_limits():
    spec = gaussian_by_separation(0.4, 10)
    mp, mn = 10 * 0.16 / 2, -10 * 0.16 / 2
    var = 10 * 0.16
    assert effective_linear_snr(2000, 0.02, 0.01, mp, mn, var, 0.0) == pytest.approx((mp - mn) ** 2 / var)
    r10 = predicted_linear_snr(20000, 0.02, 0.01, spec, w=10)
    r100 = predicted_linear_snr(20000, 0.02, 0.01, spec, w=100)
    assert abs(r10 - r100) / r100 < 0.05
    assert predicted_linear_snr(20000, 0.02, 0.01, spec, w=1e9) == pytest.approx(
        predicted_linear_snr(20000, 0.02, 0.01, spec), rel=1e-6)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_linear_snr_predictor_vs_simulation(seed):
    n = 20_000
    p, q = 2 / math.sqrt(n), 1 / math.sqrt(n)
    spec = gaussian_by_separation(0.5, 10)
    g = sample_csbm(CsbmParams(n, p, q, spec, seed))
    h = psi_for(spec)(g.attrs)
    emp = snr_empirical(neighbor_sum(g, h), g.labels)
    assert abs(emp / predicted_linear_snr(n, p, q, spec) - 1) < 0.10
    emp_nl = snr_empirical(scores(g, Nonlinear(psi_for(spec), math.log(p / q))), g.labels)
    assert abs(emp_nl / predicted_nonlinear_snr(n, p, q, spec) - 1) < 0.10
    emp_lin = snr_empirical(scores(g, Linear(psi_for(spec), 1.0)), g.labels)
    assert abs(emp_lin / predicted_linear_snr(n, p, q, spec, w=1.0) - 1) < 0.10


# ---------------------------------------------------------------- overlap


def test_overlapping_index():
    x = np.linspace(-12, 14, 20001)
    f = stats.norm(0, 1).pdf
    assert overlapping_index(f, f, x) == pytest.approx(1.0, abs=1e-6)
    a = stats.uniform(0, 1).pdf
    b = stats.uniform(2, 1).pdf
    xs = np.linspace(-1, 4, 50001)
    assert overlapping_index(a, b, xs, mass_tol=1e-3) == pytest.approx(0.0, abs=1e-12)
    g2 = stats.norm(2, 1).pdf
    oracle, _ = integrate.quad(lambda t: min(f(t), g2(t)), -30, 30, points=[1.0], limit=200)
    assert oracle == pytest.approx(0.31731, abs=1e-5)
    assert overlapping_index(f, g2, x) == pytest.approx(oracle, abs=1e-6)
    assert overlapping_index(g2, f, x) == overlapping_index(f, g2, x)
    with pytest.raises(ValueError):
        overlapping_index(f, g2, np.linspace(-1, 1, 100))


# ---------------------------------------------------------------- concentration


def test_concentration_holds_across_samples():
    ok = sum(concentration_check(sample_csbm(CsbmParams(10_000, 0.02, 0.01, gaussian_by_separation(0, 1), s)),
                                 0.4).all_ok for s in range(20))
    assert ok >= 19


@pytest.mark.xfail(strict=True, reason="every-node degree intervals at eps = 0.25 are narrower than the "
                                       "extreme degree fluctuation among 1e4 nodes (about 4 sd = 0.33 > 0.27)")
def test_concentration_tight_epsilon():
    ok = sum(concentration_check(sample_csbm(CsbmParams(10_000, 0.02, 0.01, gaussian_by_separation(0, 1), s)),
                                 0.25).all_ok for s in range(20))
    assert ok >= 19


def test_concentration_small_and_complete():
    g = sample_csbm(CsbmParams(10, 0.3, 0.2, gaussian_by_separation(0, 1), 0))
    assert concentration_check(g, 0.25).small_n
    full = sample_csbm(CsbmParams(400, 1.0, 1.0, gaussian_by_separation(0, 1), 0))
    r = concentration_check(full, 0.25)
    assert r.degree_ok and r.degree_violations == 0.0
    bare = full.with_attrs(full.attrs, provenance={})
    with pytest.raises(ValueError):
        concentration_check(bare, 0.25)


# ---------------------------------------------------------------- error predictors


def test_error_bound_predictors():
    assert error_bound_predictors(0.0, 100) == (1.0, 1.0)
    n = 1000
    _, graph = error_bound_predictors(2 * math.log(n), n)
    assert graph == pytest.approx(1.0)
    rho = np.linspace(0, 50, 101)
    node, _ = error_bound_predictors(rho, n)
    assert np.all(np.diff(node) < 0)
    assert error_bound_predictors(30.0, 10)[1] < error_bound_predictors(30.0, 1000)[1]
    with pytest.raises(ValueError):
        error_bound_predictors(-1.0, 10)


def _error_and_snr():
    n = 20_000
    p, q = 2 / math.sqrt(n), 1 / math.sqrt(n)
    out = []
    for sep in (0.3, 0.5, 0.8):
        for seed in range(3):
            spec = gaussian_by_separation(sep, 10)
            g = sample_csbm(CsbmParams(n, p, q, spec, seed))
            s = scores(g, Nonlinear(psi_for(spec), math.log(p / q)))
            out.append((float(np.mean(np.where(s >= 0, 1, -1) != g.labels)), snr_empirical(s, g.labels)))
    return out


@pytest.fixture(scope="module")
def error_snr_runs():
    return _error_and_snr()


def test_empirical_error_below_chernoff_bound(error_snr_runs):
    # with rho = (mean gap)^2 / var, a Gaussian score errs with Phi(-sqrt(rho)/2) <= exp(-rho/8)
    hits = sum(err <= math.exp(-rho / 8) for err, rho in error_snr_runs)
    assert hits >= 0.95 * len(error_snr_runs)


@pytest.mark.xfail(strict=True, reason="exp(-rho/2) is below Phi(-sqrt(rho)/2) for rho > 1.4 under the "
                                       "squared-gap SNR convention; the unspecified constants are needed")
def test_empirical_error_below_unit_constant_bound(error_snr_runs):
    hits = sum(err <= math.exp(-rho / 2) * 1.05 for err, rho in error_snr_runs)
    assert hits >= 0.95 * len(error_snr_runs)


def test_error_gap_predictor():
    assert error_gap_predictor(1.0, 1.0, 0.0, 0.0).value == 0.0
    a = error_gap_predictor(2.0, 1.5, 0.01, 0.03)
    b = error_gap_predictor(2.0, 1.5, 0.03, 0.01)
    assert a.value == b.value
    sigma = 1.0
    pred = error_gap_predictor(4 * sigma, sigma, 0.01 * sigma, 0.01 * sigma)
    exact = error_gap_exact(4 * sigma, sigma, 0.01 * sigma, 0.01 * sigma)
    oracle = 2 * (stats.norm.cdf(-3.99) - stats.norm.cdf(-4.0))
    assert exact == pytest.approx(oracle, rel=1e-9)
    assert pred.valid and abs(pred.value - exact) / exact < 0.10
    assert not error_gap_predictor(4.0, 1.0, 0.5, 0.0).valid
    with pytest.raises(ValueError):
        error_gap_predictor(1.0, 0.0, 0.1, 0.1)
