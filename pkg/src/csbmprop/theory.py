"""Analytic predictors: SNRs, information measures, regimes, moments, error bounds.

SNR convention: rho = (mean gap)^2 / variance, and the single-node error of a
Gaussian score is Phi(-sqrt(rho)/2).  Bounds use exp(-rho/2).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.special import ndtr

from . import rng as rngmod
from .csbm import AttributedGraph, CsbmParams, GaussianAttrs
from .propagation import phi

_SQRT_2PI = math.sqrt(2.0 * math.pi)

# Phi is evaluated with scipy.special.ndtr (erfc-based, accurate to ~1e-16
# relative in the body and well into both tails).
norm_cdf = ndtr


def _pdf(x):
    return np.exp(-0.5 * np.square(x)) / _SQRT_2PI


# --------------------------------------------------------------------------
# single-node SNR and information measures
# --------------------------------------------------------------------------


def snr_1d(mu1: float, mu_m1: float, sigma2: float) -> tuple[float, float]:
    """(rho, Phi(-sqrt(rho)/2)) for two equal-variance Gaussian classes."""
    if not sigma2 > 0:
        raise ValueError(f"variance must be positive, got {sigma2}")
    rho = (mu1 - mu_m1) ** 2 / sigma2
    return rho, float(norm_cdf(-math.sqrt(rho) / 2.0))


def structural_info(p: float, q: float) -> float:
    """S(p, q) = (p - q)^2 / (p + q)."""
    if p < 0 or q < 0:
        raise ValueError("p and q must be non-negative")
    if p + q <= 0:
        raise ValueError("structural information undefined for p = q = 0")
    return (p - q) ** 2 / (p + q)


def attributed_info(spec) -> float:
    """sqrt(m) * ||mu - nu||; Laplace specs use the class-location gap 2||mu||."""
    if isinstance(spec, GaussianAttrs):
        return math.sqrt(spec.m) * spec.separation
    mu = getattr(spec, "mu", None)
    if mu is None:
        raise TypeError(f"no attributed-information measure for {type(spec).__name__}")
    return math.sqrt(spec.m) * 2.0 * float(np.linalg.norm(mu))


@dataclass(frozen=True)
class AssumptionReport:
    S: float
    S_scaled: float  # S * n / (log n)^2
    S_over_gap: Optional[float]  # S / |p - q|
    attr_info: float
    attr_over_log_n: float
    notes: tuple[str, ...] = ()

    def to_dict(self):
        return asdict(self)


def check_assumptions(n: int, p: float, q: float, attr_info: float, kappa: float = 1.0) -> AssumptionReport:
    """Finite-n proxies for the structural and attributed-information assumptions.

    Only ratios are reported; ``notes`` lists the proxies that look off at this n.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    logn = math.log(n)
    S = structural_info(p, q)
    gap = abs(p - q)
    notes = []
    s_scaled = S * n / logn**2
    if S == 0:
        notes.append("structural: S = 0")
    elif s_scaled < kappa:
        notes.append(f"structural: S*n/log^2 n = {s_scaled:.3g} below {kappa}")
    s_over_gap = S / gap if gap > 0 else None
    ratio = attr_info / logn
    if math.isclose(ratio, 1.0, rel_tol=1e-9):
        notes.append("attributed: at the log n boundary")
    elif ratio > 1.0:
        notes.append("attributed: above log n")
    return AssumptionReport(S, s_scaled, s_over_gap, attr_info, ratio, tuple(notes))


# --------------------------------------------------------------------------
# closed-form moments of the clipped Gaussian message
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    variance: float
    method: str
    M: Optional[float] = None
    N: Optional[float] = None
    samples: Optional[int] = None
    seed: Optional[int] = None
    mean_se: Optional[float] = None

    @property
    def second_moment(self) -> float:
        return self.variance + self.mean**2


def moments_closed_form(m: int, mu_sq: float, p: float, q: float) -> MomentEstimate:
    """Mean and variance of phi(psi(X); log(p/q)) for X from class +1, nu = -mu.

    ``mu_sq`` is mu^T mu.  With s = sqrt(m mu^T mu) and c = log(p/q), psi(X) is
    N(2 s^2, 4 s^2) and M, N are the standardized upper and lower clip points.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if mu_sq < 0:
        raise ValueError("mu^T mu must be non-negative")
    if not (0 < p <= 1 and 0 < q <= 1):
        raise ValueError("p and q must lie in (0, 1]")
    c = math.log(p / q)
    if c == 0.0:
        return MomentEstimate(0.0, 0.0, "closed-form")
    s2 = m * mu_sq
    if s2 == 0.0:
        raise ValueError("closed form is singular at m mu^T mu = 0 with p != q; use Monte Carlo")
    sign = 1.0 if c > 0 else -1.0
    c = abs(c)
    s = math.sqrt(s2)
    M = c / (2 * s) - s
    N = -c / (2 * s) - s
    dPhi = float(norm_cdf(M) - norm_cdf(N))
    eM, eN = math.exp(-0.5 * M * M), math.exp(-0.5 * N * N)
    mean = (c * (1.0 - float(norm_cdf(M)) - float(norm_cdf(N)))
            + 2.0 * s2 * dPhi
            + math.sqrt(2.0 * s2 / math.pi) * (eN - eM))
    second = (c * c
              + (4 * s2 * s2 + 4 * s2 - c * c) * dPhi
              - 4 * s2 * s / _SQRT_2PI * (eM - eN)
              - 2 * c * s / _SQRT_2PI * (eM + eN))
    var = max(second - mean * mean, 0.0)
    return MomentEstimate(sign * mean, var, "closed-form", M=M, N=N)


def moments_monte_carlo(m: int, mu_sq: float, p: float, q: float, samples: int = 10**6, seed: int = 0) -> MomentEstimate:
    """Monte Carlo estimate of the same moments, with antithetic pairs.

    psi(X) = 2 m mu^T X with mu^T X ~ N(mu^T mu, mu^T mu / m).  Because phi is
    monotone, pairing z with -z can only reduce the variance of the mean.
    """
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    if m < 1 or mu_sq < 0:
        raise ValueError("invalid m or mu^T mu")
    c = math.log(p / q)
    half = samples // 2
    z = rngmod.stream(seed, rngmod.MC).standard_normal(half)
    centre = 2.0 * m * mu_sq
    scale = 2.0 * m * math.sqrt(mu_sq / m)
    a = phi(centre + scale * z, c)
    b = phi(centre - scale * z, c)
    vals = np.concatenate([a, b])
    pair = 0.5 * (a + b)
    mean = float(np.mean(pair))
    se = float(np.std(pair, ddof=1) / math.sqrt(half))
    var = float(np.var(vals, ddof=1))
    return MomentEstimate(mean, var, "monte-carlo", samples=2 * half, seed=seed, mean_se=se)


def message_moments(m: int, separation: float, p: float, q: float) -> MomentEstimate:
    """Moments for a CSBM-G with ||mu - nu|| = separation (mu^T mu = separation^2 / 4)."""
    if separation == 0.0 and p != q:
        c = math.log(p / q)
        return MomentEstimate(0.0, c * c, "degenerate")
    return moments_closed_form(m, separation**2 / 4.0, p, q)


# --------------------------------------------------------------------------
# predicted SNRs
# --------------------------------------------------------------------------


def _neighbor_means(n, p, q):
    return (n - 1) * p / 2.0, (n - 1) * q / 2.0


def effective_linear_snr(n: int, p: float, q: float, mean_pos: float, mean_neg: float, var: float,
                         w: float, count_noise: bool = True) -> float:
    """SNR of psi(X_v) + w * sum_u psi(X_u) conditioned on Y_v = +1.

    Neighbor counts are Binomial with means n1 = (n-1)p/2, n2 = (n-1)q/2.  With
    ``count_noise`` their variance enters the score variance; without it the
    counts are treated as fixed at their means.  ``w = inf`` gives the limit in
    which the neighbor aggregate alone is used.
    """
    n1, n2 = _neighbor_means(n, p, q)
    gap = mean_pos - mean_neg
    extra = n1 * (1 - p) * mean_pos**2 + n2 * (1 - q) * mean_neg**2 if count_noise else 0.0
    if math.isinf(w):
        num = (n1 - n2) ** 2 * gap**2
        den = (n1 + n2) * var + extra
    else:
        num = (1 + w * (n1 - n2)) ** 2 * gap**2
        den = var * (1 + w * w * (n1 + n2)) + w * w * extra
    if den <= 0:
        raise ValueError("score variance is zero")
    return num / den


def gaussian_psi_moments(spec: GaussianAttrs) -> tuple[float, float, float]:
    """(E[psi | +1], E[psi | -1], var[psi]) for the exact Gaussian transform."""
    d2 = spec.separation**2
    return spec.m * d2 / 2.0, -spec.m * d2 / 2.0, spec.m * d2


def predicted_linear_snr(n, p, q, spec: GaussianAttrs, w: float = math.inf, count_noise: bool = True) -> float:
    mp, mn, var = gaussian_psi_moments(spec)
    return effective_linear_snr(n, p, q, mp, mn, var, w, count_noise)


def predicted_nonlinear_snr(n, p, q, spec: GaussianAttrs, count_noise: bool = True) -> float:
    """SNR of the optimal nonlinear score on a CSBM-G, from the clipped-message moments."""
    mp, _, var = gaussian_psi_moments(spec)
    mom = message_moments(spec.m, spec.separation, p, q)
    n1, n2 = _neighbor_means(n, p, q)
    mean = mp + (n1 - n2) * mom.mean
    v = var + (n1 + n2) * mom.variance
    if count_noise:
        v += (n1 * (1 - p) + n2 * (1 - q)) * mom.mean**2
    if v <= 0:
        raise ValueError("score variance is zero")
    return (2.0 * mean) ** 2 / v


def snr_empirical(scores, labels) -> float:
    """(mean_+1 - mean_-1)^2 / var_+1 from observed scores."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    a, b = s[y == 1], s[y == -1]
    if a.size < 2 or b.size < 2:
        raise ValueError("need at least two scores per class")
    v = float(np.var(a, ddof=1))
    if v <= 0:
        raise ValueError("class +1 scores have zero variance")
    return float((a.mean() - b.mean()) ** 2 / v)


# --------------------------------------------------------------------------
# regimes
# --------------------------------------------------------------------------

VERY_LIMITED_FACTOR = 0.5


@dataclass(frozen=True)
class RegimeReport:
    n: int
    S: float
    attr_info: float
    log_ratio: float
    regime: str
    separability_threshold: float
    separable: bool
    rho_r: Optional[float] = None
    rho_l_star: Optional[float] = None

    def to_dict(self):
        return asdict(self)


def regime_of(n: int, p: float, q: float, attr_info: float) -> str:
    """Finite-n proxy for the attributed-information regime.

    very-limited: attr_info < 0.5 |log(p/q)|; limited: attr_info <= 1;
    sufficient: 1 < attr_info < log n; boundary otherwise.
    """
    lr = abs(math.log(p / q))
    if attr_info < VERY_LIMITED_FACTOR * lr:
        return "very-limited"
    if attr_info <= 1.0:
        return "limited"
    if attr_info < math.log(n):
        return "sufficient"
    return "boundary"


def classify_regime(params: CsbmParams) -> RegimeReport:
    p, q, n = params.p, params.q, params.n
    if not (0 < p <= 1 and 0 < q <= 1):
        raise ValueError("p and q must lie in (0, 1]")
    if p == q:
        raise ValueError("regime undefined for p = q")
    if n < 2:
        raise ValueError("need n >= 2")
    S = structural_info(p, q)
    ai = attributed_info(params.attr)
    thr = math.sqrt(math.log(n) / (S * n))
    rho_r = rho_l = None
    if isinstance(params.attr, GaussianAttrs) and params.attr.separation > 0:
        rho_r = predicted_nonlinear_snr(n, p, q, params.attr)
        rho_l = predicted_linear_snr(n, p, q, params.attr)
    return RegimeReport(n, S, ai, abs(math.log(p / q)), regime_of(n, p, q, ai), thr, ai > thr, rho_r, rho_l)


# --------------------------------------------------------------------------
# overlapping index
# --------------------------------------------------------------------------

Density = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


def overlapping_index(density_a: Density, density_b: Density, grid, mass_tol: float = 1e-6) -> float:
    """Trapezoidal integral of min(p_A, p_B) over a 1-d grid, clipped to [0, 1]."""
    x = np.asarray(grid, dtype=np.float64)
    if x.ndim != 1 or x.size < 2 or np.any(np.diff(x) <= 0):
        raise ValueError("grid must be strictly increasing with at least two points")
    fa = np.asarray(density_a(x) if callable(density_a) else density_a, dtype=np.float64)
    fb = np.asarray(density_b(x) if callable(density_b) else density_b, dtype=np.float64)
    if fa.shape != x.shape or fb.shape != x.shape:
        raise ValueError("densities must be evaluated on the grid")
    if np.any(fa < 0) or np.any(fb < 0):
        raise ValueError("densities must be non-negative")
    for name, f in (("A", fa), ("B", fb)):
        mass = float(np.trapezoid(f, x))
        if mass < 1.0 - mass_tol:
            raise ValueError(f"grid covers only {mass:.8f} of density {name}'s mass")
    return float(np.clip(np.trapezoid(np.minimum(fa, fb), x), 0.0, 1.0))


# --------------------------------------------------------------------------
# concentration ball
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ConcentrationReport:
    n: int
    epsilon: float
    delta1: float
    delta2: float
    class_sizes_ok: bool
    degree_ok: bool
    same_fraction_ok: bool
    cross_fraction_ok: bool
    degree_violations: float
    same_violations: float
    cross_violations: float
    violating_fraction: float
    small_n: bool

    @property
    def all_ok(self) -> bool:
        return self.class_sizes_ok and self.degree_ok and self.same_fraction_ok and self.cross_fraction_ok

    def to_dict(self):
        d = asdict(self)
        d["all_ok"] = self.all_ok
        return d


def _generative_pq(g: AttributedGraph, p, q):
    if p is not None and q is not None:
        return float(p), float(q)
    params = g.provenance.get("params") if isinstance(g.provenance, dict) else None
    if not params:
        raise ValueError("generative p and q are unknown for this graph")
    return float(params["p"]), float(params["q"])


def concentration_check(g: AttributedGraph, epsilon: float, p: Optional[float] = None,
                        q: Optional[float] = None) -> ConcentrationReport:
    """Membership of a sampled graph in B(n^(eps-1/2), (np)^(eps-1/2))."""
    p, q = _generative_pq(g, p, q)
    if p + q <= 0:
        raise ValueError("p + q must be positive")
    n = g.n
    d1 = n ** (epsilon - 0.5)
    d2 = (n * p) ** (epsilon - 0.5) if p > 0 else math.inf
    n_pos = int(np.sum(g.labels == 1))
    half = n / 2.0
    sizes_ok = all(half * (1 - d1) <= k <= half * (1 + d1) for k in (n_pos, n - n_pos))
    deg = g.degree().astype(np.float64)
    mean_deg = (p + q) * (n - 1) / 2.0
    deg_bad = (deg < mean_deg * (1 - d2)) | (deg > mean_deg * (1 + d2))
    rows = np.repeat(np.arange(n), g.degree())
    same = np.bincount(rows, weights=(g.labels[g.indices] == g.labels[rows]).astype(np.float64), minlength=n)
    with np.errstate(invalid="ignore", divide="ignore"):
        fs = same / deg
        fc = (deg - same) / deg
    ts, tc = p / (p + q), q / (p + q)
    iso = deg == 0
    same_bad = iso | (fs < ts * (1 - d2)) | (fs > ts * (1 + d2))
    cross_bad = iso | (fc < tc * (1 - d2)) | (fc > tc * (1 + d2))
    any_bad = deg_bad | same_bad | cross_bad
    return ConcentrationReport(
        n=n, epsilon=epsilon, delta1=d1, delta2=d2,
        class_sizes_ok=sizes_ok,
        degree_ok=not bool(deg_bad.any()),
        same_fraction_ok=not bool(same_bad.any()),
        cross_fraction_ok=not bool(cross_bad.any()),
        degree_violations=float(deg_bad.mean()) if n else 0.0,
        same_violations=float(same_bad.mean()) if n else 0.0,
        cross_violations=float(cross_bad.mean()) if n else 0.0,
        violating_fraction=float(any_bad.mean()) if n else 0.0,
        small_n=bool(n < 1000 or d1 >= 1 or d2 >= 1),
    )


# --------------------------------------------------------------------------
# error predictors
# --------------------------------------------------------------------------


def error_bound_predictors(rho, n: int):
    """(exp(-rho/2), min(1, n exp(-rho/2))): single-node and whole-graph failure bounds."""
    r = np.asarray(rho, dtype=np.float64)
    if np.any(r < 0):
        raise ValueError("rho must be non-negative")
    node = np.exp(-r / 2.0)
    graph = np.minimum(1.0, n * node)
    if node.ndim == 0:
        return float(node), float(graph)
    return node, graph


@dataclass(frozen=True)
class ErrorGap:
    value: float
    valid: bool


def error_gap_predictor(mu: float, sigma: float, dmu1: float, dmu2: float) -> ErrorGap:
    """First-order increase in error when N(mu, s^2) / N(-mu, s^2) move inward by dmu1 / dmu2.

    ``valid`` is False once max(|dmu|) * mu / sigma^2 exceeds 0.1.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    val = math.exp(-(mu * mu) / (2 * sigma * sigma)) / _SQRT_2PI * (dmu1 + dmu2) / sigma
    valid = max(abs(dmu1), abs(dmu2)) * abs(mu) / sigma**2 <= 0.1
    return ErrorGap(val, valid)


def error_gap_exact(mu: float, sigma: float, dmu1: float, dmu2: float) -> float:
    """Exact tail-mass difference summed over both perturbed classes."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    base = float(norm_cdf(-mu / sigma))
    return (float(norm_cdf((dmu1 - mu) / sigma)) - base) + (float(norm_cdf((dmu2 - mu) / sigma)) - base)
