"""Adam, loss functions and the training loop."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

import numpy as np

from . import monotone as _mono
from . import network as _net
from .errors import ConfigError, DataError, ShapeError, StateError, TrainingError
from .monotone import MonotoneModel
from .network import Network
from .norms import Mode
from .tensor_core import make_rng

log = logging.getLogger(__name__)

Model = Union[Network, MonotoneModel]


class LossKind(str, Enum):
    MSE = "mse"
    BCE = "bce"
    SCALED_CE = "scaled_ce"


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list, repr=False)
    v: list[np.ndarray] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.lr < 0:
            raise ConfigError(f"learning rate must be nonnegative, got {self.lr}")


def adam_step(state: AdamState, params: list[np.ndarray], grads: list[np.ndarray]) -> list[np.ndarray]:
    """One bias-corrected Adam update, applied to ``params`` in place."""
    if len(params) != len(grads):
        raise StateError(f"{len(params)} parameters but {len(grads)} gradients")
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    if len(state.m) != len(params):
        raise StateError("optimizer state was built for a different parameter list")
    state.step += 1
    bc1 = 1.0 - state.beta1**state.step
    bc2 = 1.0 - state.beta2**state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape or p.shape != m.shape:
            raise StateError(f"shape mismatch: parameter {p.shape}, gradient {g.shape}, moment {m.shape}")
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params


def enforce_constraints(model: Model) -> Model:
    """Project infeasible weights back onto the feasible set (in place)."""
    core = model.core if isinstance(model, MonotoneModel) else model
    _net.enforce_constraints(core)
    return model


def _log_sigmoid(s: np.ndarray) -> np.ndarray:
    return -np.logaddexp(0.0, -s)


def loss_and_grad(kind, predictions, targets, tau: float = 1.0) -> tuple[float, np.ndarray]:
    """Mean loss over samples and its gradient w.r.t. ``predictions``.

    ``scaled_ce`` is cross-entropy on ``tau * logits``: softmax over columns for
    a 2-D prediction array, or the two-class case on a vector of logits.
    """
    kind = LossKind(kind)
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    n = p.shape[0]
    if n == 0:
        raise DataError("empty batch")
    if kind is LossKind.MSE:
        if t.size != p.size:
            raise ShapeError(f"{p.shape} predictions vs {t.shape} targets")
        r = p - t.reshape(p.shape)
        return float(np.mean(r * r)), 2.0 * r / r.size
    if kind is LossKind.SCALED_CE and not tau > 0:
        raise ConfigError(f"tau must be positive, got {tau}")
    scale = tau if kind is LossKind.SCALED_CE else 1.0
    if p.ndim == 2 and p.shape[1] > 1:
        if kind is LossKind.BCE:
            raise ShapeError("bce expects one logit per sample")
        labels = t.astype(np.int64)
        if t.shape != (n,) or np.any(labels != t) or labels.min() < 0 or labels.max() >= p.shape[1]:
            raise DataError("cross-entropy targets must be class indices")
        z = scale * p
        logp = z - np.logaddexp.reduce(z, axis=1, keepdims=True)
        loss = -float(np.mean(logp[np.arange(n), labels]))
        grad = np.exp(logp)
        grad[np.arange(n), labels] -= 1.0
        return loss, grad * (scale / n)
    if t.size != p.size or not np.all((t == 0) | (t == 1)):
        raise DataError("binary targets must be 0 or 1 and match the predictions")
    s = scale * p
    tt = t.reshape(p.shape)
    loss = -float(np.mean(tt * _log_sigmoid(s) + (1.0 - tt) * _log_sigmoid(-s)))
    grad = (np.exp(_log_sigmoid(s)) - tt) * (scale / n)
    return loss, grad


@dataclass
class TrainConfig:
    epochs: int = 1000
    lr: float = 1e-2
    batch_size: int = 0  # 0: full batch
    seed: int = 0
    loss: LossKind = LossKind.MSE
    tau: float = 1.0
    shuffle: bool = True

    def __post_init__(self):
        self.loss = LossKind(self.loss)
        if self.epochs < 1:
            raise ConfigError(f"epochs must be at least 1, got {self.epochs}")
        if self.batch_size < 0:
            raise ConfigError(f"batch size must be nonnegative, got {self.batch_size}")
        if self.loss is LossKind.SCALED_CE and not self.tau > 0:
            raise ConfigError(f"tau must be positive, got {self.tau}")


def predict(model: Model, X) -> np.ndarray:
    if isinstance(model, MonotoneModel):
        return _mono.monotone_forward(model, X)
    return _net.forward(model, X)[0]


def _forward(model: Model, X):
    if isinstance(model, MonotoneModel):
        return _mono.forward(model, X)
    return _net.forward(model, X)


def _backward(model: Model, tape, grad) -> list[np.ndarray]:
    if isinstance(model, MonotoneModel):
        return _mono.backward(model, tape, grad).parameters()
    return _net.backward(model, tape, grad).parameters()


def fit(model: Model, X, y, config: TrainConfig, state: AdamState | None = None) -> tuple[Model, list[float]]:
    """Train ``model`` in place with Adam; returns it with the per-epoch mean loss."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError("training data must be a nonempty 2-D array")
    if X.shape[0] != y.shape[0]:
        raise ShapeError(f"{X.shape[0]} samples but {y.shape[0]} targets")
    core = model.core if isinstance(model, MonotoneModel) else model
    if X.shape[1] != core.input_dim:
        raise ShapeError(f"data has {X.shape[1]} features, model expects {core.input_dim}")
    project = core.policy.mode is Mode.PROJECT_AFTER_STEP
    state = state or AdamState(lr=config.lr)
    params = model.parameters()
    rng = make_rng(config.seed, stream=1)
    n = X.shape[0]
    bs = n if config.batch_size == 0 else min(config.batch_size, n)
    history: list[float] = []
    if project:
        enforce_constraints(model)
    for epoch in range(config.epochs):
        order = rng.permutation(n) if (config.shuffle and bs < n) else np.arange(n)
        total = 0.0
        for start in range(0, n, bs):
            idx = order[start : start + bs]
            xb, yb = (X, y) if bs == n else (X[idx], y[idx])
            pred, tape = _forward(model, xb)
            loss, g = loss_and_grad(config.loss, pred, yb, config.tau)
            if not np.isfinite(loss):
                raise TrainingError("loss is not finite", epoch)
            adam_step(state, params, _backward(model, tape, g))
            if project:
                enforce_constraints(model)
            total += loss * len(idx)
        history.append(total / n)
        if log.isEnabledFor(logging.DEBUG) and epoch % 100 == 0:
            log.debug("epoch %d loss %.6g", epoch, history[-1])
    return model, history
