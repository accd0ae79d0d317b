"""Self-checks behind `csbmprop verify`.

Each check returns a CheckResult; none of them raise on a mismatch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .csbm import CsbmParams, GaussianAttrs, gaussian_by_separation, laplace_by_norm, sample_csbm
from .propagation import map_bruteforce, phi, psi_gau
from .theory import moments_closed_form, moments_monte_carlo

MOMENT_GRID_S2 = (0.01, 0.1, 1.0, 4.0)  # m mu^T mu
MOMENT_GRID_RATIO = (1.1, 2.0, 5.0)  # p / q
MOMENT_M = 10


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    table: list = field(default_factory=list)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def star_instance(g: np.random.Generator, ratio: float):
    """A random star: centre attributes, neighbor attributes, p, q and a Gaussian spec."""
    m = int(g.integers(1, 6))
    mu = g.normal(0, 1, m)
    nu = g.normal(0, 1, m)
    q = float(g.uniform(0.05, 0.5)) if ratio >= 1 else float(g.uniform(0.1, 1.0))
    p = min(ratio * q, 1.0)
    if ratio >= 1:
        q = p / ratio
    k = int(g.integers(0, 9))
    spec = GaussianAttrs(mu, nu)
    ys = g.choice([-1, 1], size=k + 1)
    means = np.where(ys[:, None] == 1, mu[None, :], nu[None, :])
    X = means + g.standard_normal((k + 1, m)) / math.sqrt(m)
    return X[0], X[1:], p, q, spec


def check_map_oracle(instances: int = 200, seed: int = 0, phi_fn=phi, ratios=(1.5, 3.0, 0.5)) -> CheckResult:
    """sign(psi(x_v) + sum phi(psi(x_u); log p/q)) against exhaustive MAP enumeration."""
    g = rngmod.stream(seed, rngmod.MC, 1)
    agree = compared = 0
    for i in range(instances):
        x, nb, p, q, spec = star_instance(g, ratios[i % len(ratios)])
        c = math.log(p / q)
        h_v = psi_gau(x, spec.mu, spec.nu)
        h_u = psi_gau(nb, spec.mu, spec.nu) if len(nb) else np.empty(0)
        score = h_v + float(np.sum(phi_fn(h_u, c))) if len(nb) else h_v
        if abs(score) <= 1e-9:
            continue
        compared += 1
        agree += int((1 if score >= 0 else -1) == map_bruteforce(x, nb, p, q, spec))
    ok = compared > 0 and agree == compared
    return CheckResult("map-oracle", ok, f"{agree}/{compared} star instances agree with exhaustive MAP")


def moment_table(samples: int = 10**6, seed: int = 0) -> list[dict]:
    rows = []
    for k, s2 in enumerate(MOMENT_GRID_S2):
        for j, r in enumerate(MOMENT_GRID_RATIO):
            q = 0.1
            p = r * q
            cf = moments_closed_form(MOMENT_M, s2 / MOMENT_M, p, q)
            mc = moments_monte_carlo(MOMENT_M, s2 / MOMENT_M, p, q, samples, rngmod.derive_seed(seed, k, j))
            rows.append({"m_mu2": s2, "p_over_q": r, "mean_cf": cf.mean, "mean_mc": mc.mean,
                         "var_cf": cf.variance, "var_mc": mc.variance,
                         "mean_rel": abs(mc.mean - cf.mean) / abs(cf.mean) if cf.mean else 0.0,
                         "var_rel": abs(mc.variance - cf.variance) / cf.variance if cf.variance else 0.0})
    return rows


def check_moments(samples: int = 10**6, seed: int = 0, mean_tol: float = 0.02, var_tol: float = 0.05) -> CheckResult:
    rows = moment_table(samples, seed)
    bad = [r for r in rows
           if (abs(r["mean_cf"]) > 1e-3 and r["mean_rel"] > mean_tol) or r["var_rel"] > var_tol]
    worst_m = max(r["mean_rel"] for r in rows)
    worst_v = max(r["var_rel"] for r in rows)
    return CheckResult("moments", not bad,
                       f"{len(rows) - len(bad)}/{len(rows)} grid points within tolerance "
                       f"(worst mean {worst_m:.2e}, worst variance {worst_v:.2e})", rows)


def check_gradients(seed: int = 0, h: float = 1e-5, tol: float = 1e-4, kink: float = 1e-3) -> CheckResult:
    """Analytic gradients against central differences for every variant, away from kinks."""
    from .trainer import _psi, init_model, loss_and_grads

    g_rng = rngmod.stream(seed, rngmod.MC, 2)
    graphs = {
        "gaussian": sample_csbm(CsbmParams(200, 0.05, 0.02, gaussian_by_separation(0.8, 4), seed)),
        "laplace": sample_csbm(CsbmParams(200, 0.05, 0.02, laplace_by_norm(0.8, 4), seed)),
    }
    worst, compared, skipped = 0.0, 0, 0
    for variant, kind, fam in (("a", "clamp", "laplace"), ("a", "linear", "gaussian"), ("b", "clamp", "laplace"),
                               ("c", "linear", "gaussian"), ("linear", "linear", "gaussian")):
        G = graphs[fam]
        # redraw parameters until every ReLU input sits clear of its kink
        for _attempt in range(20):
            model = init_model(variant, 4, kind, seed=int(g_rng.integers(1 << 31)))
            if "tau" in model.params:
                model.params["tau"] = g_rng.uniform(0.3, 1.5, 4) * g_rng.choice([-1, 1], 4)
            if "t" in model.params:
                model.params["t"] = np.array([g_rng.uniform(0.3, 1.2) * g_rng.choice([-1, 1])])
            hv, z = _psi(model, G.attrs)
            near = np.min(np.abs(np.concatenate([hv + model.threshold, hv - model.threshold]))) \
                if "t" in model.params else np.inf
            if z is not None:
                T = np.abs(model.params["tau"])
                near = min(near, float(np.min(np.abs(np.concatenate([(z + T).ravel(), (z - T).ravel()])))))
            if near >= kink:
                break
        else:
            skipped += 1
            continue
        _, grads = loss_and_grads(model, G, weight_decay=1e-2)
        for k, gk in grads.items():
            for i in range(gk.size):
                a, b = model.copy(), model.copy()
                a.params[k][i] += h
                b.params[k][i] -= h
                fd = (loss_and_grads(a, G, weight_decay=1e-2)[0] - loss_and_grads(b, G, weight_decay=1e-2)[0]) / (2 * h)
                worst = max(worst, abs(fd - gk[i]) / max(abs(fd), 1e-8))
                compared += 1
    ok = compared > 0 and worst <= tol
    return CheckResult("gradients", ok, f"{compared} partial derivatives, worst relative error {worst:.2e}"
                       + (f", {skipped} model(s) skipped near a kink" if skipped else ""))


def check_phi(cases: int = 10**4, seed: int = 0, phi_fn=phi) -> CheckResult:
    g = rngmod.stream(seed, rngmod.MC, 3)
    a = g.normal(0, 5, cases)
    c = g.normal(0, 2, cases)
    out = phi_fn(a, c)
    fails = int(np.sum(np.abs(out) > np.abs(c)))
    fails += int(np.sum(out != -phi_fn(a, -c)))
    fails += int(np.sum(phi_fn(a, np.zeros(cases)) != 0))
    d = g.uniform(0, 1, cases)
    lo, hi = phi_fn(a, c), phi_fn(a + d, c)
    fails += int(np.sum(np.where(c > 0, hi < lo, hi > lo)))
    return CheckResult("phi", fails == 0, f"{fails} violations over {cases} random cases")


CHECKS = {
    "map": check_map_oracle,
    "moments": check_moments,
    "gradients": check_gradients,
    "phi": check_phi,
}


def run_checks(names, seed: int = 0) -> list[CheckResult]:
    out = []
    for nm in names:
        if nm not in CHECKS:
            raise ValueError(f"unknown check {nm!r}; choose from {', '.join(CHECKS)}")
        out.append(CHECKS[nm](seed=seed))
    return out
