"""Contextual stochastic block model: parameters, sampler, graph container, files.

Two equiprobable classes labelled +1/-1.  Same-label pairs are joined with
probability ``p``, cross-label pairs with probability ``q``, and every node
carries an m-dimensional attribute drawn from its class distribution.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Union

import numpy as np

from . import rng as rngmod

EDGE_CHUNK = 1 << 20


# --------------------------------------------------------------------------
# attribute distributions
# --------------------------------------------------------------------------


def _vec(x) -> np.ndarray:
    a = np.array(x, dtype=np.float64).reshape(-1)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GaussianAttrs:
    """Class +1 ~ N(mu, I/m), class -1 ~ N(nu, I/m)."""

    mu: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mu", _vec(self.mu))
        object.__setattr__(self, "nu", _vec(self.nu))
        if self.mu.shape != self.nu.shape or self.mu.size == 0:
            raise ValueError(f"mu and nu must be non-empty and equal length, got {self.mu.size} and {self.nu.size}")

    @property
    def m(self) -> int:
        return self.mu.size

    @property
    def separation(self) -> float:
        return float(np.linalg.norm(self.mu - self.nu))

    def to_dict(self) -> dict:
        return {"family": "gaussian", "mu": self.mu.tolist(), "nu": self.nu.tolist()}


@dataclass(frozen=True, eq=False)
class LaplaceAttrs:
    """Class y has independent Laplace(y * mu_i, b) entries."""

    mu: np.ndarray
    b: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mu", _vec(self.mu))
        if self.mu.size == 0:
            raise ValueError("mu must be non-empty")
        if not (self.b > 0 and math.isfinite(self.b)):
            raise ValueError(f"Laplace scale b must be positive, got {self.b}")

    @property
    def m(self) -> int:
        return self.mu.size

    def to_dict(self) -> dict:
        return {"family": "laplace", "mu": self.mu.tolist(), "b": float(self.b)}


@dataclass(frozen=True, eq=False)
class NefAttrs:
    """Natural exponential family described by its natural parameters.

    Only the log-partition difference M(theta_1) - M(theta_-1) is needed for
    the likelihood ratio, so that is all this carries.  There is no sampler.
    """

    theta1: np.ndarray
    theta_m1: np.ndarray
    delta_logpartition: float

    def __post_init__(self):
        object.__setattr__(self, "theta1", _vec(self.theta1))
        object.__setattr__(self, "theta_m1", _vec(self.theta_m1))
        if self.theta1.shape != self.theta_m1.shape or self.theta1.size == 0:
            raise ValueError("theta vectors must be non-empty and equal length")

    @property
    def m(self) -> int:
        return self.theta1.size

    def to_dict(self) -> dict:
        return {
            "family": "nef",
            "theta1": self.theta1.tolist(),
            "theta_m1": self.theta_m1.tolist(),
            "delta_logpartition": float(self.delta_logpartition),
        }


AttributeSpec = Union[GaussianAttrs, LaplaceAttrs, NefAttrs]


def attrs_from_dict(d: dict) -> AttributeSpec:
    family = d["family"]
    if family == "gaussian":
        return GaussianAttrs(d["mu"], d["nu"])
    if family == "laplace":
        return LaplaceAttrs(d["mu"], d["b"])
    if family == "nef":
        return NefAttrs(d["theta1"], d["theta_m1"], d["delta_logpartition"])
    raise ValueError(f"unknown attribute family {family!r}")


def unit_direction(m: int) -> np.ndarray:
    return np.full(m, 1.0 / math.sqrt(m))


def gaussian_by_separation(sep: float, m: int, midpoint=None) -> GaussianAttrs:
    """Symmetric Gaussian classes with ||mu - nu|| = sep along (1,...,1)/sqrt(m)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    mid = np.zeros(m) if midpoint is None else _vec(midpoint)
    e = unit_direction(m)
    return GaussianAttrs(mid + 0.5 * sep * e, mid - 0.5 * sep * e)


def laplace_by_norm(mu_norm: float, m: int, b: float = 1.0) -> LaplaceAttrs:
    return LaplaceAttrs(mu_norm * unit_direction(m), b)


# --------------------------------------------------------------------------
# parameters
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CsbmParams:
    n: int
    p: float
    q: float
    attr: AttributeSpec
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n:
            raise ValueError(f"n must be an integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        for name in ("p", "q"):
            v = float(getattr(self, name))
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
            object.__setattr__(self, name, v)

    @property
    def log_ratio(self) -> float:
        """log(p/q); requires p > 0 and q > 0."""
        if self.p <= 0:
            raise ValueError("p must be positive")
        if self.q <= 0:
            raise ValueError("q must be positive")
        return math.log(self.p / self.q)

    def to_dict(self) -> dict:
        return {"n": self.n, "p": self.p, "q": self.q, "attr": self.attr.to_dict(), "seed": int(self.seed)}

    @classmethod
    def from_dict(cls, d: dict) -> "CsbmParams":
        return cls(d["n"], d["p"], d["q"], attrs_from_dict(d["attr"]), d.get("seed", 0))


# --------------------------------------------------------------------------
# graph container
# --------------------------------------------------------------------------


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class AttributedGraph:
    """Undirected simple graph in CSR form with +/-1 labels and dense attributes.

    ``indices[indptr[v]:indptr[v+1]]`` is the ascending neighbor list of v.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    labels: np.ndarray
    attrs: np.ndarray
    provenance: dict = field(default_factory=dict)

    @classmethod
    def from_edges(cls, n: int, u, v, labels, attrs, provenance=None) -> "AttributedGraph":
        """Build from an undirected edge list with u < v, no duplicates."""
        u = np.asarray(u, dtype=np.int64).reshape(-1)
        v = np.asarray(v, dtype=np.int64).reshape(-1)
        if u.shape != v.shape:
            raise ValueError("edge endpoint arrays differ in length")
        if u.size and (min(u.min(), v.min()) < 0 or max(u.max(), v.max()) >= n):
            raise ValueError("edge endpoint out of range")
        if np.any(u == v):
            raise ValueError("self-loops are not allowed")
        src = np.concatenate([u, v])
        dst = np.concatenate([v, u])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        if src.size > 1:
            dup = (src[1:] == src[:-1]) & (dst[1:] == dst[:-1])
            if dup.any():
                raise ValueError("duplicate edges")
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        labels = np.asarray(labels, dtype=np.int8).reshape(-1)
        if labels.size != n or not np.all(np.abs(labels) == 1):
            raise ValueError("labels must be a length-n vector of +/-1")
        attrs = np.asarray(attrs, dtype=np.float64)
        if attrs.ndim == 1:
            attrs = attrs.reshape(n, -1)
        if attrs.shape[0] != n:
            raise ValueError(f"attribute matrix has {attrs.shape[0]} rows, expected {n}")
        idx_dtype = np.int32 if n < 2**31 else np.int64
        return cls(
            n=int(n),
            indptr=_frozen(indptr),
            indices=_frozen(dst.astype(idx_dtype)),
            labels=_frozen(labels.copy()),
            attrs=_frozen(np.ascontiguousarray(attrs).copy()),
            provenance=dict(provenance or {}),
        )

    @property
    def m(self) -> int:
        return self.attrs.shape[1]

    @property
    def num_edges(self) -> int:
        return int(self.indices.size // 2)

    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, v: int) -> np.ndarray:
        if not (0 <= v < self.n):
            raise IndexError(f"node {v} out of range [0, {self.n})")
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """(u, v) arrays with u < v, lexicographically sorted."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.degree())
        keep = self.indices > src
        return src[keep], self.indices[keep].astype(np.int64)

    def adjacency(self):
        import scipy.sparse as sp

        data = np.ones(self.indices.size, dtype=np.float64)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def with_attrs(self, attrs, provenance=None) -> "AttributedGraph":
        attrs = np.asarray(attrs, dtype=np.float64)
        if attrs.shape[0] != self.n:
            raise ValueError("attribute rows must equal n")
        return AttributedGraph(self.n, self.indptr, self.indices, self.labels,
                               _frozen(np.ascontiguousarray(attrs).copy()),
                               dict(provenance if provenance is not None else self.provenance))


# --------------------------------------------------------------------------
# sampling
# --------------------------------------------------------------------------


def sample_labels(n: int, seed: int) -> np.ndarray:
    g = rngmod.stream(seed, rngmod.LABELS)
    return (2 * g.integers(0, 2, size=n, dtype=np.int64) - 1).astype(np.int8)


def sample_attributes(labels, spec: AttributeSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw one attribute row per label.

    The centred noise is drawn before the class means are added, so two specs
    of equal dimension sampled from the same generator state share their noise.
    """
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ValueError(f"labels must be one-dimensional, got shape {labels.shape}")
    if labels.size and not np.all(np.abs(labels) == 1):
        raise ValueError("labels must be +/-1")
    n, m = labels.size, spec.m
    pos = (labels == 1)[:, None]
    if isinstance(spec, GaussianAttrs):
        noise = rng.standard_normal((n, m)) / math.sqrt(m)
        return noise + np.where(pos, spec.mu[None, :], spec.nu[None, :])
    if isinstance(spec, LaplaceAttrs):
        noise = rng.laplace(0.0, spec.b, size=(n, m))
        return noise + labels[:, None].astype(np.float64) * spec.mu[None, :]
    if isinstance(spec, NefAttrs):
        raise ValueError("NEF attribute specs carry no base measure and cannot be sampled")
    raise TypeError(f"unsupported attribute spec {type(spec).__name__}")


def _tri_rows(t: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Map linear indices of the strict upper triangle (row-major) to (i, j)."""
    kk = 2 * k - 1
    i = np.floor((kk - np.sqrt(np.maximum(kk * kk - 8.0 * t, 0.0))) / 2.0).astype(np.int64)
    np.clip(i, 0, k - 2, out=i)

    def off(r):
        return r * (2 * k - r - 1) // 2

    for _ in range(2):
        i += off(i + 1) <= t
        i -= off(i) > t
    j = t - off(i) + i + 1
    return i, j


def _skip_positions(total: int, prob: float, g: np.random.Generator, chunk: int) -> Iterator[np.ndarray]:
    """Positions of successes among ``total`` Bernoulli(prob) trials via geometric gaps."""
    if total <= 0 or prob <= 0.0:
        return
    last = -1
    while True:
        # any gap past the end terminates the block; clipping keeps cumsum in int64
        gaps = np.minimum(g.geometric(prob, size=chunk), total + 1)
        pos = last + np.cumsum(gaps)
        if pos[-1] >= total:
            pos = pos[pos < total]
            if pos.size:
                yield pos
            return
        yield pos
        last = int(pos[-1])


def iter_edges(labels, p: float, q: float, seed: int, chunk: int = EDGE_CHUNK) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield chunks of (u, v) edges, u < v, for a CSBM with the given labels.

    Nodes are grouped by label; the (+,+), (-,-) and (+,-) blocks each get
    their own random stream and are enumerated in lexicographic pair order.
    """
    labels = np.asarray(labels)
    pos = np.flatnonzero(labels == 1)
    neg = np.flatnonzero(labels == -1)
    blocks = ((0, pos, None, p), (1, neg, None, p), (2, pos, neg, q))
    for bid, a, b, prob in blocks:
        g = rngmod.stream(seed, rngmod.EDGES, bid)
        if b is None:
            k = a.size
            total = k * (k - 1) // 2
            for t in _skip_positions(total, prob, g, chunk):
                i, j = _tri_rows(t, k)
                yield a[i], a[j]
        else:
            kb = b.size
            total = a.size * kb
            for t in _skip_positions(total, prob, g, chunk):
                x, y = a[t // kb], b[t % kb]
                yield np.minimum(x, y), np.maximum(x, y)


def sample_csbm(params: CsbmParams) -> AttributedGraph:
    labels = sample_labels(params.n, params.seed)
    us, vs = [], []
    for u, v in iter_edges(labels, params.p, params.q, params.seed):
        us.append(u)
        vs.append(v)
    u = np.concatenate(us) if us else np.empty(0, dtype=np.int64)
    v = np.concatenate(vs) if vs else np.empty(0, dtype=np.int64)
    attrs = sample_attributes(labels, params.attr, rngmod.stream(params.seed, rngmod.ATTRIBUTES))
    prov = {"source": "csbm", "params": params.to_dict(), "rng": rngmod.generator_info()}
    return AttributedGraph.from_edges(params.n, u, v, labels, attrs, prov)


def degree_stats(g: AttributedGraph) -> tuple[np.ndarray, np.ndarray]:
    """Per-node degree and fraction of neighbors sharing the node's label (0 if isolated)."""
    deg = g.degree()
    rows = np.repeat(np.arange(g.n), deg)
    same = (g.labels[g.indices] == g.labels[rows]).astype(np.float64)
    same_count = np.bincount(rows, weights=same, minlength=g.n)
    frac = np.divide(same_count, deg, out=np.zeros(g.n), where=deg > 0)
    return deg, frac


# --------------------------------------------------------------------------
# files
# --------------------------------------------------------------------------

GRAPH_FORMAT = "csbmprop-graph"


def save_graph(g: AttributedGraph, out_dir, stem: str = "graph") -> dict:
    """Write header JSON, edge list, label file and attribute CSV.  Returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "header": out / f"{stem}.json",
        "edges": out / f"{stem}.edges",
        "labels": out / f"{stem}.labels",
        "attrs": out / f"{stem}.attrs.csv",
    }
    u, v = g.edges()
    np.savetxt(paths["edges"], np.column_stack([u, v]), fmt="%d %d")
    np.savetxt(paths["labels"], g.labels.astype(np.int64), fmt="%d")
    np.savetxt(paths["attrs"], g.attrs, fmt="%.17g", delimiter=",")
    params = g.provenance.get("params")
    header = {
        "format": GRAPH_FORMAT,
        "version": 1,
        "n": g.n,
        "m": g.m,
        "num_edges": g.num_edges,
        "seed": params.get("seed") if isinstance(params, dict) else None,
        "params": params,
        "provenance": {k: v for k, v in g.provenance.items() if k != "params"},
        "files": {k: p.name for k, p in paths.items() if k != "header"},
    }
    paths["header"].write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    return {k: str(p) for k, p in paths.items()}


def load_graph(header_path) -> AttributedGraph:
    hp = Path(header_path)
    header = json.loads(hp.read_text())
    if header.get("format") != GRAPH_FORMAT:
        raise ValueError(f"{hp} is not a {GRAPH_FORMAT} header")
    base = hp.parent
    n, m = header["n"], header["m"]
    edges = np.loadtxt(base / header["files"]["edges"], dtype=np.int64, ndmin=2).reshape(-1, 2)
    labels = np.loadtxt(base / header["files"]["labels"], dtype=np.int64, ndmin=1)
    attrs = np.loadtxt(base / header["files"]["attrs"], dtype=np.float64, delimiter=",", ndmin=2).reshape(n, m)
    prov = dict(header.get("provenance") or {})
    if header.get("params") is not None:
        prov["params"] = header["params"]
    return AttributedGraph.from_edges(n, edges[:, 0], edges[:, 1], labels, attrs, prov)
