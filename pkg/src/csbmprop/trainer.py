"""Learned propagation models trained by full-batch Adam on binary cross-entropy.

Variants:
  a       clamp or linear psi, bounded phi propagation
  b       clamp psi, linear propagation
  c       linear psi, bounded phi propagation
  linear  linear psi, linear propagation

psi(x) = w^T x + bias, or sum_i clip(w_i x_i, -|tau_i|, |tau_i|) + bias for the
clamp form.  Messages are phi(a; s|t|) with ReLU(a + c) - ReLU(a - c) - c for
phi(a; c); the learned threshold enters through |t| and the fixed direction
s = +1 (homophily) or -1 (heterophily) is not trained.  Keeping the sign out
of the learned parameter removes the mirrored optimum (-w, -t), in which
neighbor messages are right but a node's own term votes the wrong way.
Linear propagation uses a fixed neighbor weight that is exposed but not
trained.

Gradients are analytic.  ReLU derivatives use the convention d/da ReLU(a) = 0
at a = 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import expit

from . import rng as rngmod
from .csbm import AttributedGraph, GaussianAttrs, LaplaceAttrs

VARIANTS = ("a", "b", "c", "linear")
_PHI_VARIANTS = ("a", "c")


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-2
    weight_decay: float = 5e-4
    epochs: int = 500
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError("learning rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.weight_decay < 0:
            raise ValueError("weight decay must be >= 0")

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class TrainableModel:
    variant: str
    psi_kind: str  # "linear" or "clamp"
    params: dict  # name -> float64 array; scalars have shape (1,)
    neighbor_weight: float = 1.0
    trainable: dict = field(default_factory=dict)
    phi_sign: float = 1.0

    def __post_init__(self):
        if self.phi_sign not in (1.0, -1.0):
            raise ValueError("phi_sign must be +1 or -1")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.psi_kind not in ("linear", "clamp"):
            raise ValueError(f"unknown psi form {self.psi_kind!r}")
        if self.variant == "c" and self.psi_kind != "linear":
            raise ValueError("variant c uses a linear psi")
        if self.variant == "linear" and self.psi_kind != "linear":
            raise ValueError("the linear variant uses a linear psi")
        self.params = {k: np.array(v, dtype=np.float64).reshape(-1) for k, v in self.params.items()}
        need = ["proj", "bias"] + (["tau"] if self.psi_kind == "clamp" else []) + \
               (["t"] if self.variant in _PHI_VARIANTS else [])
        missing = [k for k in need if k not in self.params]
        if missing:
            raise ValueError(f"missing parameters {missing}")
        extra = sorted(set(self.params) - set(need))
        if extra:
            raise ValueError(f"unexpected parameters {extra} for variant {self.variant}")
        if self.psi_kind == "clamp" and self.params["tau"].shape != self.params["proj"].shape:
            raise ValueError("clamp vector must match the projection dimension")
        self.trainable = {k: bool(self.trainable.get(k, True)) for k in need}

    @property
    def m(self) -> int:
        return self.params["proj"].size

    @property
    def uses_phi(self) -> bool:
        return self.variant in _PHI_VARIANTS

    def copy(self) -> "TrainableModel":
        return TrainableModel(self.variant, self.psi_kind, {k: v.copy() for k, v in self.params.items()},
                              self.neighbor_weight, dict(self.trainable), self.phi_sign)

    @property
    def threshold(self) -> float:
        """Signed propagation threshold s * |t|."""
        return self.phi_sign * abs(float(self.params["t"][0]))

    def to_dict(self) -> dict:
        return {"variant": self.variant, "psi_kind": self.psi_kind, "neighbor_weight": self.neighbor_weight,
                "phi_sign": self.phi_sign,
                "params": {k: [float(x) for x in v] for k, v in self.params.items()},
                "trainable": dict(self.trainable)}

    @classmethod
    def from_dict(cls, d: dict) -> "TrainableModel":
        return cls(d["variant"], d["psi_kind"], d["params"], float(d.get("neighbor_weight", 1.0)),
                   d.get("trainable", {}), float(d.get("phi_sign", 1.0)))


def default_psi_kind(variant: str, family: str) -> str:
    """Clamp psi for Laplace attributes in variants a and b, linear otherwise."""
    if variant in ("a", "b") and family == "laplace":
        return "clamp"
    return "linear"


def init_model(variant: str, m: int, psi_kind: Optional[str] = None, seed: int = 0,
               threshold: float = 0.2, clamp: float = 0.2, neighbor_weight: float = 1.0,
               phi_sign: float = 1.0) -> TrainableModel:
    """Projection ~ N(0, I), bias 0, phi threshold and clamp entries at their initial values."""
    if m < 1:
        raise ValueError("m must be >= 1")
    psi_kind = psi_kind or ("clamp" if variant == "b" else "linear")
    g = rngmod.stream(seed, rngmod.INIT)
    params = {"proj": g.standard_normal(m), "bias": np.zeros(1)}
    if psi_kind == "clamp":
        params["tau"] = np.full(m, clamp)
    if variant in _PHI_VARIANTS:
        params["t"] = np.array([threshold])
    return TrainableModel(variant, psi_kind, params, neighbor_weight, phi_sign=phi_sign)


def ground_truth_model(variant: str, spec, p: float, q: float, neighbor_weight: Optional[float] = None) -> TrainableModel:
    """Parameters that reproduce the exact log-likelihood-ratio psi and threshold log(p/q)."""
    c = math.log(p / q)
    w_n = (1.0 if p >= q else -1.0) if neighbor_weight is None else neighbor_weight
    if isinstance(spec, GaussianAttrs):
        m = spec.m
        params = {"proj": m * (spec.mu - spec.nu), "bias": [-0.5 * m * (spec.mu @ spec.mu - spec.nu @ spec.nu)]}
        kind = "linear"
        if variant == "b":
            raise ValueError("variant b needs a clamp psi; Gaussian attributes have a linear one")
    elif isinstance(spec, LaplaceAttrs):
        params = {"proj": 2.0 * np.sign(spec.mu) / spec.b, "bias": [0.0], "tau": 2.0 * np.abs(spec.mu) / spec.b}
        kind = "clamp"
        if variant in ("c", "linear"):
            raise ValueError(f"variant {variant} has a linear psi, which cannot express the Laplace transform")
    else:
        raise TypeError(f"unsupported attribute spec {type(spec).__name__}")
    if variant in _PHI_VARIANTS:
        params["t"] = [abs(c)]
    return TrainableModel(variant, kind, params, w_n, phi_sign=-1.0 if c < 0 else 1.0)


# --------------------------------------------------------------------------
# forward pass
# --------------------------------------------------------------------------


def _relu_step(z):
    return (z > 0).astype(np.float64)


def _psi(model: TrainableModel, X: np.ndarray):
    """psi values plus what the backward pass needs."""
    w = model.params["proj"]
    b = model.params["bias"][0]
    if X.shape[-1] != w.size:
        raise ValueError(f"model dimension {w.size} does not match attribute dimension {X.shape[-1]}")
    if model.psi_kind == "linear":
        return X @ w + b, None
    T = np.abs(model.params["tau"])
    z = X * w
    h = np.sum(np.clip(z, -T, T), axis=-1) + b
    return h, z


def _phi(a, t):
    return np.maximum(a + t, 0.0) - np.maximum(a - t, 0.0) - t


def _adjacency(g: AttributedGraph):
    return g.adjacency()


def forward_all(model: TrainableModel, g: AttributedGraph, A=None) -> np.ndarray:
    """Scores of every node."""
    A = _adjacency(g) if A is None else A
    h, _ = _psi(model, g.attrs)
    if model.uses_phi:
        return h + A @ _phi(h, model.threshold)
    return h + model.neighbor_weight * (A @ h)


def forward(model: TrainableModel, g: AttributedGraph, v: int) -> float:
    if not (0 <= v < g.n):
        raise IndexError(f"invalid node index {v}")
    nb = g.neighbors(v)
    h_v = float(_psi(model, g.attrs[v:v + 1])[0][0])
    if nb.size == 0:
        return h_v
    h_u = _psi(model, g.attrs[nb])[0]
    if model.uses_phi:
        return h_v + float(np.sum(_phi(h_u, model.threshold)))
    return h_v + model.neighbor_weight * float(np.sum(h_u))


# --------------------------------------------------------------------------
# loss and gradients
# --------------------------------------------------------------------------


def _bce(s, y01):
    return np.logaddexp(0.0, s) - y01 * s


def loss_and_grads(model: TrainableModel, g: AttributedGraph, labels=None, weight_decay: float = 0.0,
                   A=None) -> tuple[float, dict]:
    """Mean BCE of sigmoid(score) against (y + 1) / 2, plus 0.5 * wd * ||theta||^2.

    Gradients are returned for every trainable parameter.
    """
    y = np.asarray(g.labels if labels is None else labels)
    y01 = (y + 1) / 2.0
    A = _adjacency(g) if A is None else A
    X = g.attrs
    n = g.n
    h, z = _psi(model, X)
    if model.uses_phi:
        t = model.threshold
        msg = _phi(h, t)
    else:
        msg = model.neighbor_weight * h
    s = h + A @ msg
    per = _bce(s, y01)
    if not np.all(np.isfinite(per)):
        bad = int(np.flatnonzero(~np.isfinite(per))[0])
        raise FloatingPointError(f"non-finite loss at node {bad} (score {s[bad]!r})")
    loss = float(per.mean())
    r = (expit(s) - y01) / n  # dL/ds
    Ar = A.T @ r  # dL/dmsg
    grads = {}
    if model.uses_phi:
        dmsg_dh = _relu_step(h + t) - _relu_step(h - t)
        dt = model.phi_sign * np.sign(model.params["t"][0])
        grads["t"] = np.array([dt * float(Ar @ (_relu_step(h + t) + _relu_step(h - t) - 1.0))])
        rh = r + Ar * dmsg_dh
    else:
        rh = r + model.neighbor_weight * Ar
    grads["bias"] = np.array([float(rh.sum())])
    if model.psi_kind == "linear":
        grads["proj"] = X.T @ rh
    else:
        tau = model.params["tau"]
        T = np.abs(tau)
        dz = _relu_step(z + T) - _relu_step(z - T)
        dT = _relu_step(z + T) + _relu_step(z - T) - 1.0
        grads["proj"] = (X * dz).T @ rh
        grads["tau"] = (dT.T @ rh) * np.sign(tau)
    grads = {k: v for k, v in grads.items() if model.trainable.get(k, False)}
    if weight_decay:
        for k in grads:
            grads[k] = grads[k] + weight_decay * model.params[k]
            loss += 0.5 * weight_decay * float(model.params[k] @ model.params[k])
    return loss, grads


# --------------------------------------------------------------------------
# optimization
# --------------------------------------------------------------------------


@dataclass
class TrainResult:
    model: TrainableModel
    losses: list
    config: TrainConfig

    def trace_csv(self) -> str:
        lines = ["# training loss per epoch (mean BCE plus L2 term); columns: epoch, loss", "epoch,loss"]
        lines += [f"{i},{loss!r}" for i, loss in enumerate(self.losses)]
        return "\n".join(lines) + "\n"


def train(model: TrainableModel, g: AttributedGraph, config: TrainConfig = TrainConfig()) -> TrainResult:
    """Full-batch Adam with coupled L2 weight decay; the input model is not modified."""
    model = model.copy()
    A = _adjacency(g)
    keys = [k for k, on in model.trainable.items() if on]
    m1 = {k: np.zeros_like(model.params[k]) for k in keys}
    m2 = {k: np.zeros_like(model.params[k]) for k in keys}
    losses = []
    b1, b2 = config.beta1, config.beta2
    for epoch in range(1, config.epochs + 1):
        loss, grads = loss_and_grads(model, g, weight_decay=config.weight_decay, A=A)
        if not math.isfinite(loss):
            raise FloatingPointError(f"loss diverged at epoch {epoch}; trace so far: {losses[-5:]}")
        losses.append(loss)
        for k in keys:
            gk = grads[k]
            m1[k] = b1 * m1[k] + (1 - b1) * gk
            m2[k] = b2 * m2[k] + (1 - b2) * gk * gk
            mh = m1[k] / (1 - b1**epoch)
            vh = m2[k] / (1 - b2**epoch)
            model.params[k] = model.params[k] - config.lr * mh / (np.sqrt(vh) + config.eps)
    return TrainResult(model, losses, config)


def evaluate(model: TrainableModel, g: AttributedGraph) -> float:
    s = forward_all(model, g)
    return float(np.mean(np.where(s >= 0, 1, -1) == g.labels))


def save_checkpoint(path, model: TrainableModel, config: Optional[TrainConfig] = None, extra: Optional[dict] = None):
    doc = {"format": "csbmprop-model", "version": 1, "model": model.to_dict(),
           "config": config.to_dict() if config else None, **(extra or {})}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path) -> TrainableModel:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != "csbmprop-model":
        raise ValueError(f"{path} is not a model checkpoint")
    return TrainableModel.from_dict(doc["model"])
