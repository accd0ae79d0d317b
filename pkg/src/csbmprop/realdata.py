"""Citation-network topologies with synthetic label-conditioned attributes.

Only the graph and the class ids of a dataset are used; the native features
are replaced by draws from a Gaussian or Laplace attribute model, one
independent draw for the training graph and one for the test graph.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from . import rng as rngmod
from .csbm import AttributedGraph, AttributeSpec, sample_attributes

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LabeledTopology:
    n: int
    u: np.ndarray  # edge endpoints, u < v, sorted
    v: np.ndarray
    classes: np.ndarray  # contiguous ids 0..k-1
    name: str = ""
    class_names: tuple = ()

    @property
    def num_edges(self) -> int:
        return int(self.u.size)

    @property
    def num_classes(self) -> int:
        return int(self.classes.max()) + 1 if self.n else 0

    def summary(self) -> dict:
        return {"name": self.name, "nodes": self.n, "edges": self.num_edges, "classes": self.num_classes}


def _read_pairs(path) -> list[tuple[str, str]]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) < 2:
                raise ValueError(f"{path}:{lineno}: expected 'u v', got {line!r}")
            pairs.append((parts[0], parts[1]))
    return pairs


def _simplify(n, u, v, name):
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    loops = u == v
    if loops.any():
        log.warning("%s: dropped %d self-loop(s)", name or "topology", int(loops.sum()))
        u, v = u[~loops], v[~loops]
    a, b = np.minimum(u, v), np.maximum(u, v)
    key = np.unique(a * n + b)
    if key.size < a.size:
        log.warning("%s: removed %d duplicate edge(s)", name or "topology", int(a.size - key.size))
    return key // n, key % n


def _contiguous(raw: Sequence) -> tuple[np.ndarray, tuple]:
    names = sorted(set(raw))
    index = {c: i for i, c in enumerate(names)}
    return np.array([index[c] for c in raw], dtype=np.int64), tuple(names)


def load_topology(edge_file, label_file, name: str = "") -> LabeledTopology:
    """Edge list ('u v' per line, '#' comments) plus one integer class per line (row i = node i)."""
    raw = []
    with open(label_file, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.split("#", 1)[0].strip()
            if not s:
                continue
            try:
                raw.append(int(s))
            except ValueError:
                raise ValueError(f"{label_file}:{lineno}: expected an integer class id, got {s!r}") from None
    n = len(raw)
    if n == 0:
        raise ValueError(f"{label_file}: no labels")
    classes, names = _contiguous(raw)
    pairs = _read_pairs(edge_file)
    try:
        u = np.array([int(a) for a, _ in pairs], dtype=np.int64)
        v = np.array([int(b) for _, b in pairs], dtype=np.int64)
    except ValueError as e:
        raise ValueError(f"{edge_file}: non-integer node id ({e})") from None
    bad = (u < 0) | (u >= n) | (v < 0) | (v >= n)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise ValueError(f"{edge_file}: edge ({u[k]}, {v[k]}) references a node outside 0..{n - 1}")
    u, v = _simplify(n, u, v, name)
    return LabeledTopology(n, u, v, classes, name or Path(edge_file).stem, names)


def load_linqs(content_file, cites_file, name: str = "") -> LabeledTopology:
    """LINQS '.content' (id, features..., class) and '.cites' (cited citing) files."""
    ids, raw = [], []
    with open(content_file, encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if parts:
                ids.append(parts[0])
                raw.append(parts[-1])
    index = {p: i for i, p in enumerate(ids)}
    classes, names = _contiguous(raw)
    us, vs, missing = [], [], 0
    for a, b in _read_pairs(cites_file):
        if a in index and b in index:
            us.append(index[a])
            vs.append(index[b])
        else:
            missing += 1
    if missing:
        log.warning("%s: skipped %d citation(s) to papers without a content row", name or "linqs", missing)
    u, v = _simplify(len(ids), us, vs, name)
    return LabeledTopology(len(ids), u, v, classes, name or Path(content_file).stem, names)


def save_topology(topo: LabeledTopology, edge_file, label_file) -> None:
    with open(edge_file, "w", encoding="utf-8") as fh:
        for a, b in zip(topo.u.tolist(), topo.v.tolist()):
            fh.write(f"{a} {b}\n")
    with open(label_file, "w", encoding="utf-8") as fh:
        for c in topo.classes.tolist():
            fh.write(f"{c}\n")


# --------------------------------------------------------------------------
# binarization
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class OneVsAll:
    cls: int


@dataclass(frozen=True)
class SeveralVsSeveral:
    positive: tuple[int, ...]
    negative: tuple[int, ...]


BinarizationRule = Union[OneVsAll, SeveralVsSeveral]

# Class partitions used for the several-vs-several tasks.
SEVERAL_VS_SEVERAL = {
    "cora": SeveralVsSeveral((0, 1, 2), (3, 4, 5, 6)),
    "citeseer": SeveralVsSeveral((0, 1, 2), (3, 4, 5)),
    "pubmed": SeveralVsSeveral((0, 1), (2,)),
}


def binarize(topo: LabeledTopology, rule: BinarizationRule) -> np.ndarray:
    k = topo.num_classes
    if isinstance(rule, OneVsAll):
        if not (0 <= rule.cls < k):
            raise ValueError(f"class {rule.cls} does not exist (classes 0..{k - 1})")
        y = np.where(topo.classes == rule.cls, 1, -1)
    elif isinstance(rule, SeveralVsSeveral):
        pos, neg = set(rule.positive), set(rule.negative)
        if pos & neg:
            raise ValueError(f"classes {sorted(pos & neg)} appear on both sides")
        if pos | neg != set(range(k)):
            raise ValueError(f"partition must cover classes 0..{k - 1} exactly once")
        y = np.where(np.isin(topo.classes, sorted(pos)), 1, -1)
    else:
        raise TypeError(f"unsupported rule {type(rule).__name__}")
    if not (y == 1).any() or not (y == -1).any():
        raise ValueError("binarization leaves one side empty")
    return y.astype(np.int8)


def parse_rule(text: str) -> BinarizationRule:
    """'3' -> one-vs-all on class 3; '0,1,2/3,4,5,6' -> several-vs-several."""
    t = text.strip()
    if "/" in t:
        a, b = t.split("/", 1)
        return SeveralVsSeveral(tuple(int(x) for x in a.split(",") if x),
                                tuple(int(x) for x in b.split(",") if x))
    return OneVsAll(int(t))


# --------------------------------------------------------------------------
# graphs and structure estimates
# --------------------------------------------------------------------------


def make_train_test_pair(topo: LabeledTopology, labels, spec: AttributeSpec, seed: int
                         ) -> tuple[AttributedGraph, AttributedGraph]:
    """Two graphs on the fixed topology with independent attribute draws."""
    labels = np.asarray(labels, dtype=np.int8)
    if labels.shape != (topo.n,):
        raise ValueError("one label per node is required")
    prov = {"source": "real", "name": topo.name, "seed": seed, "attr": spec.to_dict()}
    out = []
    for role, k in (("train", 0), ("test", 1)):
        X = sample_attributes(labels, spec, rngmod.stream(seed, rngmod.ATTRIBUTES, k))
        out.append(AttributedGraph.from_edges(topo.n, topo.u, topo.v, labels, X, {**prov, "role": role}))
    return out[0], out[1]


@dataclass(frozen=True)
class PQEstimate:
    p: float
    q: float
    p_floored: bool
    q_floored: bool
    intra_edges: int
    inter_edges: int
    intra_pairs: int
    inter_pairs: int


def estimate_pq(topo: LabeledTopology, labels) -> PQEstimate:
    """Empirical intra/inter-class edge densities; zero counts are floored at 1/#pairs."""
    y = np.asarray(labels)
    k1 = int(np.sum(y == 1))
    k2 = topo.n - k1
    if k1 == 0 or k2 == 0:
        raise ValueError("both classes must be non-empty")
    same = y[topo.u] == y[topo.v]
    e_in, e_out = int(same.sum()), int((~same).sum())
    pairs_in = k1 * (k1 - 1) // 2 + k2 * (k2 - 1) // 2
    pairs_out = k1 * k2

    def dens(e, pairs):
        if pairs == 0:
            return 1.0, True
        if e == 0:
            return 1.0 / pairs, True
        return e / pairs, False

    p, pf = dens(e_in, pairs_in)
    q, qf = dens(e_out, pairs_out)
    return PQEstimate(p, q, pf, qf, e_in, e_out, pairs_in, pairs_out)


def class_prior_bias(labels) -> float:
    """log(pi_+1 / pi_-1) from label frequencies."""
    y = np.asarray(labels)
    a, b = int(np.sum(y == 1)), int(np.sum(y == -1))
    if a == 0 or b == 0:
        raise ValueError("both classes must be non-empty")
    return math.log(a / b)


# --------------------------------------------------------------------------
# accuracy tables
# --------------------------------------------------------------------------

GAUSSIAN_MODELS = ("c", "linear")
LAPLACE_MODELS = ("a", "b", "c", "linear")
MODEL_LABELS = {"a": "nonlinear", "b": "psi-only", "c": "phi-only", "linear": "linear"}

REAL_COLUMNS = ("dataset", "rule", "family", "level", "model", "variant", "mean_acc", "std_acc", "trials", "accs",
                "seeds")


def _attr_for(family: str, level: float, m: int, b: float):
    from .csbm import gaussian_by_separation, laplace_by_norm

    if family == "gaussian":
        return gaussian_by_separation(level, m)
    if family == "laplace":
        return laplace_by_norm(level, m, b)
    raise ValueError(f"unknown attribute family {family!r}")


def real_accuracy_table(topo: LabeledTopology, rule: BinarizationRule, family: str, levels: Sequence[float],
                        models: Sequence[str] = (), trials: int = 5, seed: int = 0, m: int = 10, b: float = 1.0,
                        config=None, threads: int = 1):
    """Trained-model test accuracy per attribute level, averaged over trials.

    ``level`` is ||mu - nu|| for Gaussian attributes and ||mu|| for Laplace
    ones.  In every trial each model is trained on one attribute draw over
    the fixed topology and evaluated on an independent draw.
    """
    from .experiments import ExperimentResult, pmap
    from .trainer import TrainConfig, default_psi_kind, evaluate, init_model, train

    config = config or TrainConfig()
    models = tuple(models) or (GAUSSIAN_MODELS if family == "gaussian" else LAPLACE_MODELS)
    labels = binarize(topo, rule)
    tasks = [(i, t, rngmod.derive_seed(seed, i, t)) for i in range(len(levels)) for t in range(trials)]

    def one(task):
        i, _, s = task
        spec = _attr_for(family, float(levels[i]), m, b)
        tr, te = make_train_test_pair(topo, labels, spec, s)
        accs = {}
        for variant in models:
            model = init_model(variant, m, default_psi_kind(variant, family), seed=s)
            res = train(model, tr, config)
            accs[variant] = evaluate(res.model, te)
        return accs

    out = pmap(one, tasks, threads)
    rule_text = (f"{rule.cls}-vs-all" if isinstance(rule, OneVsAll)
                 else f"{','.join(map(str, rule.positive))}-vs-{','.join(map(str, rule.negative))}")
    rows = []
    for i, lev in enumerate(levels):
        sel = [k for k, tk in enumerate(tasks) if tk[0] == i]
        for variant in models:
            vals = [out[k][variant] for k in sel]
            rows.append({"dataset": topo.name, "rule": rule_text, "family": family, "level": float(lev),
                         "model": MODEL_LABELS[variant], "variant": variant, "mean_acc": float(np.mean(vals)),
                         "std_acc": float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0, "trials": len(vals),
                         "accs": vals, "seeds": [tasks[k][2] for k in sel]})
    meta = {"topology": topo.summary(), "rule": rule_text, "family": family, "levels": list(map(float, levels)),
            "models": list(models), "trials": trials, "seed": seed, "m": m, "b": b, "train": config.to_dict()}
    return ExperimentResult("real", REAL_COLUMNS, rows,
                            "test accuracy of trained models on a fixed topology with synthetic attributes;", meta)
