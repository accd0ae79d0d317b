"""Simulation protocols: n-sweeps, transition surfaces, transfer under rotated
means, weight sweeps and the sparse regime.

Edges are streamed straight into neighbor sums, so a trial never holds an
adjacency structure; n = 2e5 with ~7e7 edges fits comfortably in memory.
Trials sharing a seed share labels, edges and attribute noise (common random
numbers), which is what makes paired comparisons cheap and low-variance.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from . import rng as rngmod
from .csbm import (CsbmParams, GaussianAttrs, LaplaceAttrs, gaussian_by_separation, iter_edges,
                   laplace_by_norm, sample_attributes, sample_labels)
from .propagation import default_linear_weight, phi, psi_for
from .theory import attributed_info, regime_of

# --------------------------------------------------------------------------
# schedules
# --------------------------------------------------------------------------

FORMS: dict[str, Callable[[float], float]] = {
    "const": lambda n: 1.0,
    "inv_sqrt": lambda n: 1.0 / math.sqrt(n),
    "log_over_sqrt": lambda n: math.log(n) / math.sqrt(n),
    "log2_over_sqrt": lambda n: math.log(n) ** 2 / math.sqrt(n),
    "log4_over_n": lambda n: math.log(n) ** 4 / n,
    "sqrt_log": lambda n: math.sqrt(math.log(n)),
}

_FORM_TEXT = {
    "const": "", "inv_sqrt": "/sqrt(n)", "log_over_sqrt": "*log(n)/sqrt(n)",
    "log2_over_sqrt": "*log(n)^2/sqrt(n)", "log4_over_n": "*log(n)^4/n", "sqrt_log": "*sqrt(log(n))",
}


@dataclass(frozen=True)
class Rule:
    """coef * form(n) for one of the named forms in FORMS."""

    coef: float
    form: str = "const"

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValueError(f"unknown schedule form {self.form!r}; choose from {sorted(FORMS)}")

    def __call__(self, n: int) -> float:
        return self.coef * FORMS[self.form](n)

    def __str__(self):
        return f"{self.coef:g}{_FORM_TEXT[self.form]}"


@dataclass(frozen=True)
class Schedule:
    p: Rule
    q: Rule
    sep: Rule
    m: int = 10
    family: str = "gaussian"
    b: float = 1.0

    def __post_init__(self):
        if self.family not in ("gaussian", "laplace"):
            raise ValueError(f"unknown attribute family {self.family!r}")
        if self.m < 1:
            raise ValueError("m must be >= 1")

    def pq(self, n: int) -> tuple[float, float]:
        p, q = self.p(n), self.q(n)
        for name, v in (("p", p), ("q", q)):
            if not (0.0 < v <= 1.0):
                raise ValueError(f"schedule gives {name} = {v!r} at n = {n}, outside (0, 1]")
        return p, q

    def attr(self, n: int):
        s = self.sep(n)
        if s < 0:
            raise ValueError(f"schedule gives negative separation at n = {n}")
        if self.family == "gaussian":
            return gaussian_by_separation(s, self.m)
        return laplace_by_norm(s, self.m, self.b)

    def params(self, n: int, seed: int) -> CsbmParams:
        p, q = self.pq(n)
        return CsbmParams(n, p, q, self.attr(n), seed)

    def swapped(self) -> "Schedule":
        return replace(self, p=self.q, q=self.p)

    def to_dict(self):
        return {"p": str(self.p), "q": str(self.q), "sep": str(self.sep), "m": self.m,
                "family": self.family, "b": self.b, "rules": asdict(self)}


# --------------------------------------------------------------------------
# models
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelChoice:
    """'nonlinear', or 'linear' with an explicit weight (None = sign(p - q))."""

    kind: str
    w: Optional[float] = None

    @property
    def name(self) -> str:
        if self.kind == "nonlinear":
            return "nonlinear"
        return "linear" if self.w is None else f"linear:{self.w:g}"

    def weight(self, p, q) -> float:
        return default_linear_weight(p, q) if self.w is None else float(self.w)


def parse_model(text: str) -> ModelChoice:
    t = text.strip()
    if t == "nonlinear":
        return ModelChoice("nonlinear")
    if t == "linear":
        return ModelChoice("linear")
    if t.startswith("linear:"):
        w = float(t.split(":", 1)[1])
        if w == 0 or not math.isfinite(w):
            raise ValueError("linear weight must be finite and non-zero")
        return ModelChoice("linear", w)
    raise ValueError(f"unknown model {text!r}; use nonlinear, linear or linear:<w>")


DEFAULT_MODELS = (ModelChoice("nonlinear"), ModelChoice("linear"))


def _models(models) -> tuple[ModelChoice, ...]:
    out = tuple(parse_model(m) if isinstance(m, str) else m for m in models)
    if not out:
        raise ValueError("at least one model is required")
    return out


# --------------------------------------------------------------------------
# streaming engine
# --------------------------------------------------------------------------


def neighbor_sums(labels, p: float, q: float, seed: int, H: np.ndarray) -> np.ndarray:
    """S[v] = sum over CSBM neighbors u of H[u], streaming the edges of ``seed``.

    The edge set is exactly the one sample_csbm draws for the same labels,
    p, q and seed.
    """
    labels = np.asarray(labels)
    n = labels.size
    H = np.asarray(H, dtype=np.float64)
    if H.ndim == 1:
        return neighbor_sums(labels, p, q, seed, H[:, None])[:, 0]
    k = H.shape[1]
    S = np.zeros((n, k))
    for u, v in iter_edges(labels, p, q, seed):
        if k <= 4:
            for j in range(k):
                S[:, j] += np.bincount(u, weights=H[v, j], minlength=n)
                S[:, j] += np.bincount(v, weights=H[u, j], minlength=n)
        else:
            A = sp.csr_matrix((np.ones(u.size), (u, v)), shape=(n, n))
            S += A @ H
            S += A.T @ H
    return S


def _accuracy(score: np.ndarray, labels: np.ndarray) -> float:
    pred = np.where(score >= 0, 1, -1)
    return float(np.mean(pred == labels))


def _model_columns(h, c, models):
    """Columns to aggregate and, per model, how to read its score."""
    cols, idx = [], {}
    if any(m.kind == "linear" for m in models):
        idx["lin"] = len(cols)
        cols.append(h)
    if any(m.kind == "nonlinear" for m in models):
        idx["nl"] = len(cols)
        cols.append(phi(h, c))
    return cols, idx


def run_accuracy_trial(params: CsbmParams, models=DEFAULT_MODELS) -> dict[str, float]:
    """Sample one graph from ``params`` and return each model's accuracy."""
    models = _models(models)
    p, q = params.p, params.q
    if p <= 0 or q <= 0:
        raise ValueError("p and q must be positive to run the models")
    labels = sample_labels(params.n, params.seed)
    X = sample_attributes(labels, params.attr, rngmod.stream(params.seed, rngmod.ATTRIBUTES))
    h = np.asarray(psi_for(params.attr)(X), dtype=np.float64).reshape(params.n)
    c = math.log(p / q)
    cols, idx = _model_columns(h, c, models)
    S = neighbor_sums(labels, p, q, params.seed, np.column_stack(cols))
    out = {}
    for m in models:
        if m.kind == "nonlinear":
            out[m.name] = _accuracy(h + S[:, idx["nl"]], labels)
        else:
            out[m.name] = _accuracy(h + m.weight(p, q) * S[:, idx["lin"]], labels)
    return out


def pmap(fn, items: Sequence, threads: int = 1) -> list:
    """Map in parallel; results come back in input order."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


# --------------------------------------------------------------------------
# results and tables
# --------------------------------------------------------------------------


def fmt(x) -> str:
    """Locale-free, round-trippable text for a CSV cell."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        return repr(x)
    if isinstance(x, (list, tuple)):
        return ";".join(fmt(v) for v in x)
    return "" if x is None else str(x)


@dataclass
class ExperimentResult:
    name: str
    columns: tuple[str, ...]
    rows: list[dict]
    description: str = ""
    meta: dict = field(default_factory=dict)

    def column(self, key):
        return [r[key] for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# {self.name}: {self.description} columns: {', '.join(self.columns)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([fmt(r.get(c)) for c in self.columns])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(self.to_csv())


def read_csv(path) -> tuple[list[str], list[dict]]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    r = csv.DictReader(lines)
    return list(r.fieldnames or []), list(r)


# --------------------------------------------------------------------------
# n-sweeps
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    schedule: Schedule
    n_grid: tuple[int, ...]
    trials: int = 5
    models: tuple = DEFAULT_MODELS
    seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.n_grid or any(int(n) != n or n < 2 for n in self.n_grid):
            raise ValueError("n grid must contain integers >= 2")
        object.__setattr__(self, "models", _models(self.models))
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        for n in self.n_grid:
            self.schedule.pq(n)

    def to_dict(self):
        return {"schedule": self.schedule.to_dict(), "n_grid": list(self.n_grid), "trials": self.trials,
                "models": [m.name for m in self.models], "seed": self.seed}


SWEEP_COLUMNS = ("n", "model", "mean_acc", "std_acc", "p", "q", "sep", "attr_info", "regime", "trials", "accs", "seeds")


def sweep_n(spec: SweepSpec, threads: int = 1) -> ExperimentResult:
    """Mean accuracy of every model at every n on the grid."""
    tasks = [(i, n, t, rngmod.derive_seed(spec.seed, i, t))
             for i, n in enumerate(spec.n_grid) for t in range(spec.trials)]

    def one(task):
        _, n, _, seed = task
        return run_accuracy_trial(spec.schedule.params(n, seed), spec.models)

    accs = pmap(one, tasks, threads)
    rows = []
    for i, n in enumerate(spec.n_grid):
        sel = [k for k, tk in enumerate(tasks) if tk[0] == i]
        seeds = [tasks[k][3] for k in sel]
        p, q = spec.schedule.pq(n)
        attr = spec.schedule.attr(n)
        ai = attributed_info(attr)
        regime = regime_of(n, p, q, ai) if p != q else "degenerate"
        for m in spec.models:
            vals = [accs[k][m.name] for k in sel]
            rows.append({"n": n, "model": m.name, "mean_acc": float(np.mean(vals)),
                         "std_acc": float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0,
                         "p": p, "q": q, "sep": spec.schedule.sep(n), "attr_info": ai, "regime": regime,
                         "trials": len(vals), "accs": vals, "seeds": seeds})
    return ExperimentResult("sweep", SWEEP_COLUMNS, rows,
                            "mean sign-rule accuracy per n and model over independent graphs;", spec.to_dict())


def gap_by_n(result: ExperimentResult, a: str = "nonlinear", b: str = "linear") -> dict[int, float]:
    acc = {(r["n"], r["model"]): r["mean_acc"] for r in result.rows}
    return {n: acc[(n, a)] - acc[(n, b)] for n, _ in acc if (n, a) in acc and (n, b) in acc}


def sparse_regime_sweep(spec: SweepSpec, threads: int = 1) -> ExperimentResult:
    """n-sweep on a sparse schedule; same contract as sweep_n."""
    res = sweep_n(spec, threads)
    res.name = "sparse"
    return res


# --------------------------------------------------------------------------
# weight sweep
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class WSweepSpec:
    schedule: Schedule
    w_grid: tuple[float, ...]
    n_grid: tuple[int, ...]
    trials: int = 5
    seed: int = 0

    def __post_init__(self):
        if any(w == 0 or not math.isfinite(w) for w in self.w_grid):
            raise ValueError("weights must be finite and non-zero")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for n in self.n_grid:
            self.schedule.pq(n)

    def to_dict(self):
        return {"schedule": self.schedule.to_dict(), "w_grid": list(self.w_grid),
                "n_grid": list(self.n_grid), "trials": self.trials, "seed": self.seed}


WSWEEP_COLUMNS = ("n", "w", "mean_acc", "std_acc", "trials", "accs", "seeds")


def w_sweep(spec: WSweepSpec, threads: int = 1) -> ExperimentResult:
    """Linear-model accuracy per (n, w); all weights are scored on the same graphs."""
    models = tuple(ModelChoice("linear", float(w)) for w in spec.w_grid)
    tasks = [(i, n, t, rngmod.derive_seed(spec.seed, i, t))
             for i, n in enumerate(spec.n_grid) for t in range(spec.trials)]
    accs = pmap(lambda tk: run_accuracy_trial(spec.schedule.params(tk[1], tk[3]), models), tasks, threads)
    rows = []
    for i, n in enumerate(spec.n_grid):
        sel = [k for k, tk in enumerate(tasks) if tk[0] == i]
        for m in models:
            vals = [accs[k][m.name] for k in sel]
            rows.append({"n": n, "w": m.w, "mean_acc": float(np.mean(vals)),
                         "std_acc": float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0,
                         "trials": len(vals), "accs": vals, "seeds": [tasks[k][3] for k in sel]})
    return ExperimentResult("wsweep", WSWEEP_COLUMNS, rows,
                            "linear-model accuracy per n and neighbor weight w on paired graphs;", spec.to_dict())


# --------------------------------------------------------------------------
# transition surface
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TransitionSpec:
    n: int = 20000
    fixed: float = 5e-3
    struct_points: int = 12
    sep_min: float = 1e-4
    sep_max: float = 10.0
    sep_points: int = 12
    heterophilic: bool = False
    trials: int = 5
    m: int = 10
    family: str = "gaussian"
    b: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.fixed <= 1):
            raise ValueError("fixed probability must lie in (0, 1]")
        if self.struct_points < 1 or self.sep_points < 1 or self.trials < 1:
            raise ValueError("grid sizes and trials must be >= 1")
        if not (0 < self.sep_min <= self.sep_max):
            raise ValueError("need 0 < sep_min <= sep_max")

    def varying(self) -> np.ndarray:
        """Log-spaced values of the swept probability, from the fixed value up to 1."""
        return np.geomspace(self.fixed, 1.0, self.struct_points)

    def seps(self) -> np.ndarray:
        return np.geomspace(self.sep_min, self.sep_max, self.sep_points)

    def pq(self, j: int) -> tuple[float, float]:
        v = float(self.varying()[j])
        return (self.fixed, v) if self.heterophilic else (v, self.fixed)

    def attr(self, sep: float):
        if self.family == "gaussian":
            return gaussian_by_separation(float(sep), self.m)
        return laplace_by_norm(float(sep), self.m, self.b)

    def to_dict(self):
        return asdict(self)


TRANSITION_COLUMNS = ("struct_idx", "sep_idx", "p", "q", "log_ratio", "sep", "attr_info",
                      "acc_nonlinear", "acc_linear", "gap", "flag", "trials")


def transition_curve(spec: TransitionSpec, threads: int = 1) -> ExperimentResult:
    """Accuracy surface over (structural information, attributed information).

    One topology per (structure point, trial) is shared by every separation
    level, as is the attribute noise.  Points with p = q carry no propagation
    threshold, so the nonlinear entry is left empty and flagged.
    """
    seps = spec.seps()
    tasks = [(j, t, rngmod.derive_seed(spec.seed, j, t))
             for j in range(spec.struct_points) for t in range(spec.trials)]

    def one(task):
        j, _, seed = task
        p, q = spec.pq(j)
        labels = sample_labels(spec.n, seed)
        c = math.log(p / q)
        w = default_linear_weight(p, q)
        hs = []
        for s in seps:
            attr = spec.attr(s)
            X = sample_attributes(labels, attr, rngmod.stream(seed, rngmod.ATTRIBUTES))
            hs.append(np.asarray(psi_for(attr)(X), dtype=np.float64).reshape(spec.n))
        cols = hs + [phi(h, c) for h in hs]
        S = neighbor_sums(labels, p, q, seed, np.column_stack(cols))
        k = len(hs)
        nl = [_accuracy(hs[i] + S[:, k + i], labels) for i in range(k)]
        lin = [_accuracy(hs[i] + w * S[:, i], labels) for i in range(k)]
        return nl, lin

    res = pmap(one, tasks, threads)
    rows = []
    for j in range(spec.struct_points):
        p, q = spec.pq(j)
        sel = [res[k] for k, tk in enumerate(tasks) if tk[0] == j]
        degenerate = p == q
        for i, s in enumerate(seps):
            lin = float(np.mean([r[1][i] for r in sel]))
            nl = float("nan") if degenerate else float(np.mean([r[0][i] for r in sel]))
            rows.append({"struct_idx": j, "sep_idx": i, "p": p, "q": q, "log_ratio": abs(math.log(p / q)),
                         "sep": float(s), "attr_info": attributed_info(spec.attr(s)),
                         "acc_nonlinear": nl, "acc_linear": lin, "gap": nl - lin,
                         "flag": "p_equals_q" if degenerate else "", "trials": len(sel)})
    return ExperimentResult("transition", TRANSITION_COLUMNS, rows,
                            "gap = nonlinear minus linear mean accuracy;", spec.to_dict())


# --------------------------------------------------------------------------
# transfer under rotated means
# --------------------------------------------------------------------------


def complement_direction(d: np.ndarray) -> np.ndarray:
    """Unit vector orthogonal to d, built from the standard basis vector least aligned with it.

    That basis vector keeps a residual of norm at least sqrt(1 - 1/m) after projection, so
    the result stays orthogonal to working precision even when d is nearly axis-aligned.
    """
    d = np.asarray(d, dtype=np.float64)
    m = d.size
    if m < 2:
        raise ValueError("a rotation needs attribute dimension >= 2")
    u = d / np.linalg.norm(d)
    r = np.zeros(m)
    r[int(np.argmin(np.abs(u)))] = 1.0
    for _ in range(2):
        r = r - (r @ u) * u
        r = r / np.linalg.norm(r)
    return r


def rotate_means(mu, nu, theta: float) -> tuple[np.ndarray, np.ndarray]:
    """Rotate mu - nu by theta in the plane of (mu - nu, complement), keeping the midpoint."""
    mu = np.asarray(mu, dtype=np.float64)
    nu = np.asarray(nu, dtype=np.float64)
    d = mu - nu
    nd = np.linalg.norm(d)
    if nd == 0:
        raise ValueError("mu and nu coincide; nothing to rotate")
    u = d / nd
    w = complement_direction(d)
    rd = nd * (math.cos(theta) * u + math.sin(theta) * w)
    mid = 0.5 * (mu + nu)
    return mid + 0.5 * rd, mid - 0.5 * rd


def intensity_to_angle(intensity: float) -> float:
    """Angle theta with 1 - cos(theta) = intensity."""
    if not (0.0 <= intensity <= 2.0):
        raise ValueError("intensity must lie in [0, 2]")
    return math.acos(1.0 - intensity)


def perturbation_intensity(mu, nu, mu2, nu2) -> float:
    d = np.asarray(mu) - np.asarray(nu)
    d2 = np.asarray(mu2) - np.asarray(nu2)
    return float(1.0 - (d2 @ d) / (d @ d))


@dataclass(frozen=True)
class TransferSpec:
    schedule: Schedule
    n: int = 20000
    intensities: tuple[float, ...] = (0.01, 0.02, 0.05, 0.1, 0.2)
    trials: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.schedule.family != "gaussian":
            raise ValueError("transfer experiments use Gaussian attributes")
        if self.trials < 2:
            raise ValueError("transfer needs at least two trials for a noise floor")
        for x in self.intensities:
            intensity_to_angle(x)
        self.schedule.pq(self.n)

    def to_dict(self):
        return {"schedule": self.schedule.to_dict(), "n": self.n, "intensities": list(self.intensities),
                "trials": self.trials, "seed": self.seed}


TRANSFER_COLUMNS = ("intensity", "theta", "dxi_nonlinear", "se_nonlinear", "dxi_linear", "se_linear",
                    "ratio", "ratio_se", "flagged", "err0_nonlinear", "err0_linear", "trials")


def transfer_experiment(spec: TransferSpec, threads: int = 1) -> ExperimentResult:
    """Error increase of the train-side models when test means are rotated.

    Models keep the training psi (mu, nu) and threshold log(p/q).  Each trial
    draws one topology and one noise matrix; the unshifted and every shifted
    test graph reuse both, so the differences isolate the mean shift.
    """
    n = spec.n
    p, q = spec.schedule.pq(n)
    base = spec.schedule.attr(n)
    psi = psi_for(base)
    c = math.log(p / q)
    w = default_linear_weight(p, q)
    thetas = [intensity_to_angle(x) for x in spec.intensities]
    shifted = []
    for th in thetas:
        mu2, nu2 = rotate_means(base.mu, base.nu, th)
        if abs(np.linalg.norm(mu2 - nu2) - np.linalg.norm(base.mu - base.nu)) > 1e-12 * max(1.0, base.separation):
            raise AssertionError("rotation changed ||mu - nu||")
        shifted.append(GaussianAttrs(mu2, nu2))
    seeds = [rngmod.derive_seed(spec.seed, t) for t in range(spec.trials)]

    def one(seed):
        labels = sample_labels(n, seed)
        hs = []
        for attr in [base, *shifted]:
            X = sample_attributes(labels, attr, rngmod.stream(seed, rngmod.ATTRIBUTES))
            hs.append(np.asarray(psi(X), dtype=np.float64).reshape(n))
        k = len(hs)
        S = neighbor_sums(labels, p, q, seed, np.column_stack(hs + [phi(h, c) for h in hs]))
        err_nl = [1.0 - _accuracy(hs[i] + S[:, k + i], labels) for i in range(k)]
        err_lin = [1.0 - _accuracy(hs[i] + w * S[:, i], labels) for i in range(k)]
        return err_nl, err_lin

    res = pmap(one, seeds, threads)
    T = len(res)
    e_nl = np.array([r[0] for r in res])
    e_lin = np.array([r[1] for r in res])
    rows = []
    for i, (x, th) in enumerate(zip(spec.intensities, thetas)):
        d_nl = e_nl[:, i + 1] - e_nl[:, 0]
        d_lin = e_lin[:, i + 1] - e_lin[:, 0]
        m_nl, m_lin = float(d_nl.mean()), float(d_lin.mean())
        se_nl = float(d_nl.std(ddof=1) / math.sqrt(T))
        se_lin = float(d_lin.std(ddof=1) / math.sqrt(T))
        flagged = not (abs(m_lin) >= 3.0 * se_lin and m_lin != 0.0)
        if flagged:
            ratio = ratio_se = float("nan")
        else:
            ratio = m_nl / m_lin
            cov = float(np.cov(d_nl, d_lin, ddof=1)[0, 1]) / T
            var = (se_nl**2 / m_lin**2 + m_nl**2 * se_lin**2 / m_lin**4 - 2 * m_nl * cov / m_lin**3)
            ratio_se = math.sqrt(max(var, 0.0))
        rows.append({"intensity": x, "theta": th, "dxi_nonlinear": m_nl, "se_nonlinear": se_nl,
                     "dxi_linear": m_lin, "se_linear": se_lin, "ratio": ratio, "ratio_se": ratio_se,
                     "flagged": flagged, "err0_nonlinear": float(e_nl[:, 0].mean()),
                     "err0_linear": float(e_lin[:, 0].mean()), "trials": T})
    meta = spec.to_dict()
    meta["seeds"] = seeds
    return ExperimentResult("transfer", TRANSFER_COLUMNS, rows,
                            "dxi = error(rotated test means) - error(training means); ratio = dxi_nonlinear / dxi_linear,"
                            " empty when |dxi_linear| < 3 standard errors;", meta)


# --------------------------------------------------------------------------
# presets
# --------------------------------------------------------------------------

SWEEP_N_GRID = (10000, 20000, 50000, 100000)
WIDE_N_GRID = (10000, 20000, 50000, 100000, 200000)


def _sched(p, q, sep, **kw):
    return Schedule(Rule(*p), Rule(*q), Rule(*sep), **kw)


_DENSE_LIMITED = ((2, "inv_sqrt"), (1, "inv_sqrt"))
_SPARSE = ((0.1, "log4_over_n"), (0.08, "log4_over_n"))


@dataclass(frozen=True)
class Preset:
    name: str
    kind: str  # sweep | sparse | wsweep | transfer | transition
    schedule: Optional[Schedule] = None
    n_grid: tuple[int, ...] = SWEEP_N_GRID
    transition: Optional[TransitionSpec] = None
    note: str = ""


PRESETS: dict[str, Preset] = {
    "fig3-left": Preset("fig3-left", "sweep", _sched(*_DENSE_LIMITED, (0.3, "log2_over_sqrt")),
                        note="homophily, limited attributed information"),
    "fig3-middle": Preset("fig3-middle", "sweep", _sched((10, "inv_sqrt"), (9, "inv_sqrt"), (1, "sqrt_log")),
                          note="homophily, sufficient attributed information"),
    "fig3-right": Preset("fig3-right", "sweep", _sched((9, "inv_sqrt"), (10, "inv_sqrt"), (0.5, "const")),
                         note="heterophily, fixed attributed information"),
    "fig4-limited": Preset("fig4-limited", "transfer", _sched(*_DENSE_LIMITED, (0.3, "log2_over_sqrt")),
                           n_grid=(20000,), note="transfer, limited attributed information"),
    "fig4-suff": Preset("fig4-suff", "transfer", _sched(*_DENSE_LIMITED, (0.1, "sqrt_log")),
                        n_grid=(20000,), note="transfer, sufficient attributed information"),
    "fig5-homo": Preset("fig5-homo", "transition", transition=TransitionSpec(heterophilic=False),
                        note="q = 5e-3 fixed, p from q to 1"),
    "fig5-hetero": Preset("fig5-hetero", "transition", transition=TransitionSpec(heterophilic=True),
                          note="p = 5e-3 fixed, q from p to 1"),
    "fig7-limited": Preset("fig7-limited", "wsweep", _sched(*_DENSE_LIMITED, (0.2, "log_over_sqrt")), WIDE_N_GRID),
    "fig7-fixed": Preset("fig7-fixed", "wsweep", _sched(*_DENSE_LIMITED, (0.05, "const")), WIDE_N_GRID),
    "fig7-suff": Preset("fig7-suff", "wsweep", _sched(*_DENSE_LIMITED, (0.01, "sqrt_log")), WIDE_N_GRID),
    "fig8-limited": Preset("fig8-limited", "sparse", _sched(*_SPARSE, (0.03, "log2_over_sqrt"))),
    "fig8-fixed": Preset("fig8-fixed", "sparse", _sched(*_SPARSE, (0.03, "const"))),
    "fig8-suff": Preset("fig8-suff", "sparse", _sched(*_SPARSE, (0.03, "sqrt_log"))),
}

W_GRID = (0.5, 1.0, 2.0, 10.0)


def preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}") from None
