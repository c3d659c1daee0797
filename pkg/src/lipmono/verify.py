"""Independent checks: finite differences, sampled Lipschitz estimates, monotonicity audits, certificates.

Nothing in here calls the backward pass; gradients come only from function
evaluations, so agreement with ``backward`` is a genuine cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import norms
from .activations import ActivationKind
from .errors import ConfigError, OracleError
from .monotone import MonotoneModel
from .network import CERT_RTOL, Network, forward
from .tensor_core import make_rng

DEFAULT_H = 1e-5
BOX_EXPANSION = 0.5


def finite_diff_grad(fn: Callable[[np.ndarray], float], x, h: float = DEFAULT_H) -> np.ndarray:
    """Central differences ``(fn(x + h e_i) - fn(x - h e_i)) / 2h`` for every coordinate."""
    if not h > 0:
        raise ConfigError(f"step must be positive, got {h}")
    x = np.array(x, dtype=np.float64)
    flat = x.reshape(-1)
    out = np.empty(flat.size)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        up = float(fn(x))
        flat[i] = old - h
        down = float(fn(x))
        flat[i] = old
        if not (np.isfinite(up) and np.isfinite(down)):
            raise OracleError(f"function is not finite near coordinate {i}")
        out[i] = (up - down) / (2.0 * h)
    return out.reshape(x.shape)


def kink_distance(net: Network, X) -> np.ndarray:
    """Per row, the smallest distance of any pre-activation to a nondifferentiable point.

    GroupSort contributes the smallest gap inside a block, Householder the
    magnitude of ``z . v`` and ReLU ``|z|``.  Finite differences are only
    trustworthy where this exceeds the step size by a wide margin.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    _, tape = forward(net, X)
    out = np.full(X.shape[0], np.inf)
    for layer, Z in zip(net.layers, tape.preacts):
        act = layer.activation
        if act.kind is ActivationKind.GROUPSORT and act.group_size > 1:
            blocks = np.sort(Z.reshape(Z.shape[0], -1, act.group_size), axis=-1)
            gap = np.diff(blocks, axis=-1).reshape(Z.shape[0], -1).min(axis=1)
        elif act.kind is ActivationKind.HOUSEHOLDER:
            gap = np.abs(Z @ act.reflection)
        elif act.kind is ActivationKind.RELU:
            gap = np.abs(Z).min(axis=1)
        else:
            continue
        out = np.minimum(out, gap)
    return out


def relative_error(a, b, floor: float = 1e-8) -> float:
    """``max|a - b| / max(max|a|, max|b|, floor)``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = max(float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(b), initial=0.0)), floor)
    return float(np.max(np.abs(a - b), initial=0.0)) / scale


# --------------------------------------------------------------------------- #
# sampling boxes
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=np.float64).reshape(-1)
        hi = np.asarray(self.hi, dtype=np.float64).reshape(-1)
        if lo.size == 0 or lo.shape != hi.shape or np.any(hi < lo) or not np.all(np.isfinite(lo) & np.isfinite(hi)):
            raise ConfigError("sampling box must have finite bounds with lo <= hi in every feature")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def width(self) -> np.ndarray:
        return self.hi - self.lo

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.lo + self.width * rng.random((n, self.lo.size))

    def describe(self) -> str:
        return ";".join(f"[{a:.6g},{b:.6g}]" for a, b in zip(self.lo, self.hi))


def data_box(X, expand: float = BOX_EXPANSION) -> Box:
    """Per-feature data range, widened by ``expand`` times the range on each side."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    lo, hi = X.min(axis=0), X.max(axis=0)
    pad = expand * (hi - lo)
    return Box(lo - pad, hi + pad)


# --------------------------------------------------------------------------- #
# monotonicity audit
# --------------------------------------------------------------------------- #


@dataclass
class AuditReport:
    certificate: float
    lam: float
    grad_min: np.ndarray
    grad_max: np.ndarray
    trials: int
    violations: int
    worst_margin: float
    box: str
    seed: int
    directions: np.ndarray = field(default=None)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_text(self) -> str:
        fmt = lambda a: " ".join(format(float(v), ".17g") for v in a)  # noqa: E731
        lines = [
            f"certificate = {self.certificate:.17g}",
            f"lambda = {self.lam:.17g}",
            f"directions = {' '.join(str(int(d)) for d in self.directions)}",
            f"grad_min = {fmt(self.grad_min)}",
            f"grad_max = {fmt(self.grad_max)}",
            f"trials = {self.trials}",
            f"violations = {self.violations}",
            f"worst_margin = {self.worst_margin:.17g}",
            f"box = {self.box}",
            f"seed = {self.seed}",
            f"passed = {str(self.passed).lower()}",
        ]
        return "\n".join(lines) + "\n"


def _grad_fd_batch(fn: Callable[[np.ndarray], np.ndarray], X: np.ndarray, h: float) -> np.ndarray:
    """Central differences for a batch, one batched evaluation pair per coordinate."""
    G = np.empty_like(X)
    for i in range(X.shape[1]):
        up = X.copy()
        up[:, i] += h
        down = X.copy()
        down[:, i] -= h
        G[:, i] = (fn(up) - fn(down)) / (2.0 * h)
    return G


def audit_monotonicity(
    model,
    box: Box,
    trials: int = 10_000,
    seed: int = 0,
    directions=None,
    rtol: float = 1e-9,
) -> AuditReport:
    """Sample ``x`` in ``box`` and step ``x`` toward larger outputs along every masked feature.

    Counts trials where ``f(x + s * delta) < f(x) - rtol * (1 + |f(x)|)`` with
    ``delta >= 0`` supported on the masked features and ``s`` their directions.
    ``model`` is a :class:`MonotoneModel` or any batch callable, in which case
    ``directions`` is required.
    """
    if trials < 1:
        raise ConfigError("audit needs at least one trial")
    if not isinstance(box, Box):
        box = Box(*box)
    if isinstance(model, MonotoneModel):
        fn = model.__call__
        directions = model.mask.directions if directions is None else directions
        cert, lam = model.core.certificate(), model.lam
    else:
        if directions is None:
            raise ConfigError("directions are required when auditing a plain callable")
        fn = model
        cert, lam = float("nan"), float("nan")
    directions = np.asarray(directions, dtype=np.int64)
    if directions.shape != box.lo.shape:
        raise ConfigError("directions and box dimensions differ")
    rng = make_rng(seed, stream=2)
    X = box.sample(rng, trials)
    delta = rng.random((trials, box.lo.size)) * box.width * (directions != 0)
    Xp = X + directions * delta
    fx = np.asarray(fn(X), dtype=np.float64).reshape(-1)
    fxp = np.asarray(fn(Xp), dtype=np.float64).reshape(-1)
    if not (np.all(np.isfinite(fx)) and np.all(np.isfinite(fxp))):
        raise OracleError("model output is not finite inside the audit box")
    margin = fxp - fx
    violations = int(np.sum(margin < -rtol * (1.0 + np.abs(fx))))
    G = _grad_fd_batch(lambda z: np.asarray(fn(z), dtype=np.float64).reshape(-1), X[: min(trials, 2000)], DEFAULT_H)
    return AuditReport(
        certificate=cert,
        lam=lam,
        grad_min=G.min(axis=0),
        grad_max=G.max(axis=0),
        trials=trials,
        violations=violations,
        worst_margin=float(margin.min()),
        box=box.describe(),
        seed=seed,
        directions=directions,
    )


# --------------------------------------------------------------------------- #
# Lipschitz estimates
# --------------------------------------------------------------------------- #


def lipschitz_ratio(fn, X, Y) -> float:
    """Largest ``|f(x) - f(y)| / ||x - y||_1`` over paired rows; identical pairs are skipped."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    dist = np.abs(X - Y).sum(axis=1)
    keep = dist > 0
    if not np.any(keep):
        return 0.0
    fx = np.asarray(fn(X[keep]), dtype=np.float64).reshape(keep.sum(), -1)
    fy = np.asarray(fn(Y[keep]), dtype=np.float64).reshape(keep.sum(), -1)
    return float(np.max(np.abs(fx - fy).max(axis=1) / dist[keep]))


def empirical_lipschitz(model_or_fn, box: Box, pairs: int = 100_000, seed: int = 0, local_scale: float = 1e-3) -> float:
    """Sampled lower bound on the L1 Lipschitz constant.

    Half of the pairs are independent points of ``box``; the other half are
    points paired with a small random displacement (``local_scale`` times the
    box width), which probes the local gradient.
    """
    if pairs < 1:
        raise ConfigError("need at least one pair")
    if not isinstance(box, Box):
        box = Box(*box)
    fn = model_or_fn
    rng = make_rng(seed, stream=3)
    n_far = pairs // 2
    n_near = pairs - n_far
    best = 0.0
    chunk = 20_000
    for count, near in ((n_far, False), (n_near, True)):
        done = 0
        while done < count:
            m = min(chunk, count - done)
            X = box.sample(rng, m)
            if near:
                Y = X + local_scale * box.width * rng.uniform(-1.0, 1.0, X.shape)
            else:
                Y = box.sample(rng, m)
            best = max(best, lipschitz_ratio(fn, X, Y))
            done += m
    return best


# --------------------------------------------------------------------------- #
# certification
# --------------------------------------------------------------------------- #


@dataclass
class CertifyReport:
    certificate: float
    lam: float
    layer_norms: list[float]
    layer_budget: float
    passed: bool
    offending_layer: int | None
    monotone_bound: float | None = None

    def to_text(self) -> str:
        lines = [
            f"certificate = {self.certificate:.17g}",
            f"lambda = {self.lam:.17g}",
            f"layer_budget = {self.layer_budget:.17g}",
            f"layer_norms = {' '.join(format(v, '.17g') for v in self.layer_norms)}",
        ]
        if self.monotone_bound is not None:
            lines.append(f"monotone_bound = {self.monotone_bound:.17g}")
        lines.append(f"offending_layer = {'none' if self.offending_layer is None else self.offending_layer}")
        lines.append(f"passed = {str(self.passed).lower()}")
        return "\n".join(lines) + "\n"


def certify(model) -> CertifyReport:
    """Recompute layer norms from the weights the model evaluates with and compare to ``lam``."""
    core: Network = model.core if isinstance(model, MonotoneModel) else model
    policy = core.policy
    ns = norms.layer_norms(core.effective_weights(), policy)
    cert = float(np.prod(ns))
    passed = cert <= policy.lam * (1.0 + CERT_RTOL)
    offending = None
    if not passed:
        ratios = [v / policy.layer_budget for v in ns]
        offending = int(np.argmax(ratios))
    mono = 2.0 * policy.lam if isinstance(model, MonotoneModel) and len(model.mask.support) else None
    return CertifyReport(cert, policy.lam, ns, policy.layer_budget, bool(passed), offending, mono)
