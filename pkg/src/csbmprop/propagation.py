"""Attribute transforms, the bounded neighbor message, and node scores.

A node's score combines its own log-likelihood ratio with one message per
neighbor.  The optimal (MAP) message is the neighbor's log-likelihood ratio
clipped to +/-log(p/q); the linear baseline passes it through scaled by w.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .csbm import AttributedGraph, AttributeSpec, GaussianAttrs, LaplaceAttrs, NefAttrs


def _check_finite(x, what):
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{what} must be finite")


def phi(a, c):
    """ReLU(a + c) - ReLU(a - c) - c, evaluated as sign(c) * clip(a, -|c|, |c|).

    The clip form is algebraically identical and keeps |phi| <= |c| exact in
    floating point.
    """
    a = np.asarray(a, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    _check_finite(a, "phi argument")
    _check_finite(c, "phi threshold")
    ac = np.abs(c)
    out = np.sign(c) * np.clip(a, -ac, ac)
    return out if out.ndim else float(out)


def phi_relu(a, c):
    """Literal ReLU form of phi, kept as a cross-check."""
    a = np.asarray(a, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    out = np.maximum(a + c, 0.0) - np.maximum(a - c, 0.0) - c
    return out if out.ndim else float(out)


def _rows(x, m):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != m:
        raise ValueError(f"attribute dimension {x.shape[-1]} does not match {m}")
    return x


def psi_gau(x, mu, nu, m: Optional[int] = None):
    """m * ((mu - nu)^T x - (|mu|^2 - |nu|^2) / 2); x may be one row or a matrix."""
    mu = np.asarray(mu, dtype=np.float64)
    nu = np.asarray(nu, dtype=np.float64)
    if mu.shape != nu.shape:
        raise ValueError("mu and nu differ in dimension")
    m = mu.size if m is None else m
    x = _rows(x, mu.size)
    out = m * (x @ (mu - nu) - 0.5 * (mu @ mu - nu @ nu))
    return out if np.ndim(out) else float(out)


def psi_lap(x, mu, b):
    """Exact Laplace log-likelihood ratio sum_i (|x_i + mu_i| - |x_i - mu_i|) / b."""
    if not b > 0:
        raise ValueError(f"Laplace scale b must be positive, got {b}")
    mu = np.asarray(mu, dtype=np.float64)
    x = _rows(x, mu.size)
    out = np.sum(phi(2.0 * x / b, 2.0 * mu / b), axis=-1)
    return out if np.ndim(out) else float(out)


def psi_nef(x, theta1, theta_m1, delta_logpartition):
    """(theta1 - theta_m1)^T x - (M(theta1) - M(theta_m1))."""
    t1 = np.asarray(theta1, dtype=np.float64)
    t2 = np.asarray(theta_m1, dtype=np.float64)
    if t1.shape != t2.shape:
        raise ValueError("theta vectors differ in dimension")
    x = _rows(x, t1.size)
    out = x @ (t1 - t2) - delta_logpartition
    return out if np.ndim(out) else float(out)


# --------------------------------------------------------------------------
# transform objects
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GaussianPsi:
    mu: np.ndarray
    nu: np.ndarray

    def __call__(self, x):
        return psi_gau(x, self.mu, self.nu)

    @property
    def m(self):
        return len(self.mu)


@dataclass(frozen=True, eq=False)
class LaplacePsi:
    mu: np.ndarray
    b: float

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError(f"Laplace scale b must be positive, got {self.b}")

    def __call__(self, x):
        return psi_lap(x, self.mu, self.b)

    @property
    def m(self):
        return len(self.mu)


@dataclass(frozen=True, eq=False)
class NefPsi:
    theta1: np.ndarray
    theta_m1: np.ndarray
    delta_logpartition: float

    def __call__(self, x):
        return psi_nef(x, self.theta1, self.theta_m1, self.delta_logpartition)

    @property
    def m(self):
        return len(self.theta1)


@dataclass(frozen=True, eq=False)
class LearnedPsi:
    """w^T x + bias, or sum_i phi(w_i x_i; |tau_i|) + bias when ``clamp`` is given."""

    w: np.ndarray
    bias: float = 0.0
    clamp: Optional[np.ndarray] = None

    def __call__(self, x):
        w = np.asarray(self.w, dtype=np.float64)
        x = _rows(x, w.size)
        if self.clamp is None:
            out = x @ w + self.bias
        else:
            tau = np.abs(np.asarray(self.clamp, dtype=np.float64))
            out = np.sum(np.clip(x * w, -tau, tau), axis=-1) + self.bias
        return out if np.ndim(out) else float(out)

    @property
    def m(self):
        return len(self.w)


PsiFn = Union[GaussianPsi, LaplacePsi, NefPsi, LearnedPsi]


def psi_for(spec: AttributeSpec) -> PsiFn:
    """The exact log-likelihood-ratio transform of an attribute distribution."""
    if isinstance(spec, GaussianAttrs):
        return GaussianPsi(spec.mu, spec.nu)
    if isinstance(spec, LaplaceAttrs):
        return LaplacePsi(spec.mu, spec.b)
    if isinstance(spec, NefAttrs):
        return NefPsi(spec.theta1, spec.theta_m1, spec.delta_logpartition)
    raise TypeError(f"unsupported attribute spec {type(spec).__name__}")


def log_ratio(p: float, q: float) -> float:
    """Propagation threshold log(p/q).  Zero probabilities are rejected, not clamped."""
    if not (0 < p <= 1):
        raise ValueError(f"p must be in (0, 1], got {p}")
    if not (0 < q <= 1):
        raise ValueError(f"q must be in (0, 1], got {q}")
    return math.log(p / q)


# --------------------------------------------------------------------------
# model specs and scoring
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Nonlinear:
    psi: PsiFn
    c: float

    def __post_init__(self):
        if not math.isfinite(self.c):
            raise ValueError("threshold must be finite")


@dataclass(frozen=True)
class Linear:
    psi: PsiFn
    w: float


ModelSpec = Union[Nonlinear, Linear]


def default_linear_weight(p: float, q: float) -> float:
    """w = 1 for homophily, -1 for heterophily."""
    return 1.0 if p >= q else -1.0


def _check_node(g: AttributedGraph, v: int):
    if isinstance(v, bool) or int(v) != v or not (0 <= v < g.n):
        raise IndexError(f"invalid node index {v!r} for graph with {g.n} nodes")


def propagate_nonlinear(g: AttributedGraph, v: int, psi: PsiFn, c: float) -> float:
    _check_node(g, v)
    own = psi(g.attrs[v])
    nb = g.neighbors(v)
    if nb.size == 0:
        return float(own)
    return float(own + np.sum(phi(psi(g.attrs[nb]), c)))


def propagate_linear(g: AttributedGraph, v: int, psi: PsiFn, w: float) -> float:
    _check_node(g, v)
    own = psi(g.attrs[v])
    nb = g.neighbors(v)
    if nb.size == 0:
        return float(own)
    return float(own + w * np.sum(psi(g.attrs[nb])))


def neighbor_sum(g: AttributedGraph, values: np.ndarray) -> np.ndarray:
    """sum_{u in N(v)} values[u] for every v."""
    rows = np.repeat(np.arange(g.n), g.degree())
    return np.bincount(rows, weights=np.asarray(values, dtype=np.float64)[g.indices], minlength=g.n)


def scores(g: AttributedGraph, model: ModelSpec) -> np.ndarray:
    """Scores of every node under a model, vectorized."""
    h = np.asarray(model.psi(g.attrs), dtype=np.float64).reshape(g.n)
    if isinstance(model, Nonlinear):
        return h + neighbor_sum(g, phi(h, model.c))
    if isinstance(model, Linear):
        return h + model.w * neighbor_sum(g, h)
    raise TypeError(f"unsupported model {type(model).__name__}")


def classify(score):
    """sign(score), with a score of exactly 0 classified as +1."""
    s = np.asarray(score, dtype=np.float64)
    _check_finite(s, "score")
    out = np.where(s >= 0, 1, -1).astype(np.int8)
    return out if out.ndim else int(out)


# --------------------------------------------------------------------------
# brute-force MAP
# --------------------------------------------------------------------------

MAX_BRUTEFORCE_NEIGHBORS = 20


def log_density(x, y: int, spec: AttributeSpec) -> np.ndarray:
    """log P_y(x) up to a label-independent constant; x is one row or a matrix."""
    x = np.asarray(x, dtype=np.float64)
    if isinstance(spec, GaussianAttrs):
        mean = spec.mu if y == 1 else spec.nu
        m = spec.m
        d = x - mean
        return -0.5 * m * np.sum(d * d, axis=-1) + 0.5 * m * math.log(m / (2 * math.pi))
    if isinstance(spec, LaplaceAttrs):
        d = x - y * spec.mu
        return -np.sum(np.abs(d), axis=-1) / spec.b - spec.m * math.log(2 * spec.b)
    if isinstance(spec, NefAttrs):
        theta = spec.theta1 if y == 1 else spec.theta_m1
        shift = spec.delta_logpartition if y == 1 else 0.0
        return x @ theta - shift
    raise TypeError(f"unsupported attribute spec {type(spec).__name__}")


def map_bruteforce(x_v, neighbor_attrs, p: float, q: float, attr_spec: AttributeSpec) -> int:
    """Exact MAP label of a node by enumerating every joint labelling of it and its neighbors.

    Maximizes P_{y_v}(x_v) * prod_u P_{y_u}(x_u) * p^[y_u = y_v] * q^[y_u != y_v]
    over (y_v, y_u...) and returns the y_v of the maximizer (+1 on ties).
    """
    if not (0 < p <= 1) or not (0 < q <= 1):
        raise ValueError("p and q must lie in (0, 1]")
    nbr = np.asarray(neighbor_attrs, dtype=np.float64).reshape(-1, attr_spec.m)
    k = nbr.shape[0]
    if k > MAX_BRUTEFORCE_NEIGHBORS:
        raise ValueError(f"{k} neighbors exceeds the enumeration limit of {MAX_BRUTEFORCE_NEIGHBORS}")
    own = {y: float(log_density(x_v, y, attr_spec)) for y in (1, -1)}
    if k:
        nb = {y: np.asarray(log_density(nbr, y, attr_spec), dtype=np.float64) for y in (1, -1)}
    else:
        nb = {1: np.empty(0), -1: np.empty(0)}
    for arr in (*own.values(), *nb[1], *nb[-1]):
        if not np.isfinite(arr):
            raise ValueError("zero density encountered")
    lp, lq = math.log(p), math.log(q)
    assign = np.array(list(itertools.product((1, -1), repeat=k)), dtype=np.int8).reshape(2**k, k)
    best = {}
    for yv in (1, -1):
        same = assign == yv
        total = own[yv] + np.sum(np.where(assign == 1, nb[1], nb[-1]) + np.where(same, lp, lq), axis=1)
        best[yv] = float(np.max(total))
    return 1 if best[1] >= best[-1] else -1


# --------------------------------------------------------------------------
# score dumps
# --------------------------------------------------------------------------

SCORE_COLUMNS = ("node", "label", "score_nonlinear", "score_linear", "pred_nl", "pred_lin")


def write_scores_csv(path, g: AttributedGraph, s_nl: np.ndarray, s_lin: np.ndarray) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(SCORE_COLUMNS)
        pn, pl = classify(s_nl), classify(s_lin)
        for v in range(g.n):
            wr.writerow([v, int(g.labels[v]), repr(float(s_nl[v])), repr(float(s_lin[v])), int(pn[v]), int(pl[v])])
