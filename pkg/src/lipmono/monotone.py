"""Monotone models ``f(x) = g(s * x) + lam * sum_{i in S} s_i x_i``.

``g`` is a network with L1 Lipschitz constant ``lam``, so each partial
derivative of ``g`` lies in ``[-lam, lam]``.  Adding ``lam`` times the masked
coordinates shifts those partials to ``[0, 2 lam]``.  Decreasing features are
handled by flipping their sign (``s_i = -1``) before both terms, which reduces
them to the increasing case.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import network as _net
from .errors import ConfigError, ShapeError
from .network import Network


@dataclass
class MonotoneMask:
    directions: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.directions)
        if d.ndim != 1 or not np.all(np.isin(d, (-1, 0, 1))):
            raise ConfigError("monotone directions must be a 1-D sequence of -1, 0, +1")
        self.directions = d.astype(np.int64)

    @classmethod
    def from_indices(cls, dim: int, increasing: Sequence[int] = (), decreasing: Sequence[int] = ()) -> "MonotoneMask":
        d = np.zeros(dim, dtype=np.int64)
        d[list(increasing)] = 1
        d[list(decreasing)] = -1
        return cls(d)

    @property
    def support(self) -> np.ndarray:
        """Indices of constrained features."""
        return np.flatnonzero(self.directions)

    @property
    def flip(self) -> np.ndarray:
        """Per-feature sign applied to the input: the direction on masked features, +1 elsewhere."""
        return np.where(self.directions == 0, 1.0, self.directions.astype(np.float64))

    def __len__(self) -> int:
        return len(self.directions)


@dataclass
class MonotoneModel:
    core: Network
    mask: MonotoneMask

    def __post_init__(self):
        if self.core.output_dim != 1:
            raise ConfigError("monotone models have a scalar output")
        if len(self.mask) != self.core.input_dim:
            raise ShapeError(f"mask has {len(self.mask)} entries, network input width is {self.core.input_dim}")

    @property
    def lam(self) -> float:
        return self.core.lam

    @property
    def input_dim(self) -> int:
        return self.core.input_dim

    def parameters(self) -> list[np.ndarray]:
        return self.core.parameters()

    def n_parameters(self) -> int:
        return self.core.n_parameters()

    def copy(self) -> "MonotoneModel":
        return MonotoneModel(self.core.copy(), MonotoneMask(self.mask.directions.copy()))

    def __call__(self, x) -> np.ndarray:
        return monotone_forward(self, x)


@dataclass
class MonotoneTape:
    core: _net.ForwardTape
    squeeze: bool


def _flipped(model: MonotoneModel, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.input_dim or x.ndim not in (1, 2):
        raise ShapeError(f"input has shape {x.shape}, model expects width {model.input_dim}")
    squeeze = x.ndim == 1
    return np.atleast_2d(x) * model.mask.flip, squeeze


def residual(model: MonotoneModel, x) -> np.ndarray:
    """The monotone term ``lam * sum_{i in S} s_i x_i`` for each row of ``x``."""
    xt, squeeze = _flipped(model, x)
    r = model.lam * xt[:, model.mask.support].sum(axis=1)
    return r[0] if squeeze else r


def forward(model: MonotoneModel, x) -> tuple[np.ndarray, MonotoneTape]:
    xt, squeeze = _flipped(model, x)
    g, tape = _net.forward(model.core, xt)
    out = g[:, 0] + model.lam * xt[:, model.mask.support].sum(axis=1)
    return (out[0] if squeeze else out), MonotoneTape(tape, squeeze)


def backward(model: MonotoneModel, tape: MonotoneTape, grad_out) -> _net.Gradients:
    """Parameter gradients and input gradient of ``sum(f(x) * grad_out)``."""
    go = np.atleast_1d(np.asarray(grad_out, dtype=np.float64)).reshape(-1, 1)
    grads = _net.backward(model.core, tape.core, go)
    dxt = np.atleast_2d(grads.inputs)
    dxt[:, model.mask.support] += model.lam * go
    dx = dxt * model.mask.flip
    grads.inputs = dx[0] if tape.squeeze else dx
    return grads


def monotone_forward(model: MonotoneModel, x) -> np.ndarray:
    """Scalar output for one sample, or a vector of outputs for a batch."""
    return forward(model, x)[0]


def monotone_grad(model: MonotoneModel, x) -> np.ndarray:
    """Input gradient of ``f`` at ``x`` (per row for a batch)."""
    out, tape = forward(model, x)
    return backward(model, tape, np.ones_like(np.atleast_1d(out))).inputs


@dataclass(frozen=True)
class LipschitzSummary:
    core_bound: float
    per_coordinate: np.ndarray
    certificate: float


def lipschitz_summary(model: MonotoneModel) -> LipschitzSummary:
    """Certified bound per input coordinate: ``2 lam`` on masked features, ``lam`` elsewhere."""
    lam, cert = _net.input_jacobian_bound(model.core)
    per = np.where(model.mask.directions != 0, 2.0 * lam, lam)
    return LipschitzSummary(lam, per, cert)


def enforce_constraints(model: MonotoneModel) -> MonotoneModel:
    _net.enforce_constraints(model.core)
    return model


def freeze(model: MonotoneModel) -> MonotoneModel:
    return MonotoneModel(_net.freeze(model.core), MonotoneMask(model.mask.directions.copy()))
