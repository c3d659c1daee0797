"""Matrix norms and the weight-normalization maps that bound a network's Lipschitz constant.

Layer weights are stored output-major, shape ``(n_out, n_in)``, and a layer
computes ``a @ W.T + b``.  Column ``k`` therefore holds every weight leaving
input ``k`` and the largest absolute column sum (:func:`one_norm`) is the
operator norm induced by the L1 vector norm.  The row-sum norm
(:func:`inf_norm`) is the L-infinity operator norm and :func:`max_abs` is the
L1-to-L-infinity operator norm.

A depth-``D`` network gets a per-layer budget of ``lam ** (1 / D)`` so that the
product of layer norms, the certificate, never exceeds ``lam``.

A norm counts as over budget only beyond a relative slack of
``FEASIBLE_RTOL``.  Rescaled weights can land an ulp above the budget, and the
slack makes them exact fixed points of every map here.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .tensor_core import as_matrix

FEASIBLE_RTOL = 1e-12


class Scheme(str, Enum):
    ONE_NORM_FULL_A = "one_norm_full_a"
    ONE_NORM_FULL_B = "one_norm_full_b"
    ONE_NORM_COLUMNWISE = "one_norm_columnwise"
    INF_NORM = "inf_norm"


class Mode(str, Enum):
    FORWARD_NORMALIZE = "forward"
    PROJECT_AFTER_STEP = "project"


@dataclass(frozen=True)
class ConstraintPolicy:
    scheme: Scheme = Scheme.ONE_NORM_COLUMNWISE
    mode: Mode = Mode.FORWARD_NORMALIZE
    lam: float = 1.0
    depth: int = 1

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "mode", Mode(self.mode))
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise ConfigError(f"lambda must be positive, got {self.lam}")
        if int(self.depth) != self.depth or self.depth < 1:
            raise ConfigError(f"depth must be a positive integer, got {self.depth}")

    @property
    def layer_budget(self) -> float:
        return _budget(self.lam, self.depth)


def _budget(lam: float, depth: int) -> float:
    if not lam > 0:
        raise ConfigError(f"lambda must be positive, got {lam}")
    return 1.0 if lam == 1.0 else float(lam) ** (1.0 / depth)


def _shrink(ratio):
    """Divisor for a norm-to-budget ``ratio``: the ratio itself when over budget, else 1."""
    return np.where(ratio > 1.0 + FEASIBLE_RTOL, ratio, 1.0)


def column_abs_sums(m) -> np.ndarray:
    return np.abs(as_matrix(m)).sum(axis=0)


def row_abs_sums(m) -> np.ndarray:
    return np.abs(as_matrix(m)).sum(axis=1)


def one_norm(m) -> float:
    """Largest absolute column sum."""
    return float(column_abs_sums(m).max())


def inf_norm(m) -> float:
    """Largest absolute row sum."""
    return float(row_abs_sums(m).max())


def max_abs(m) -> float:
    return float(np.abs(as_matrix(m)).max())


# --------------------------------------------------------------------------- #
# normalization maps
# --------------------------------------------------------------------------- #


def normalize_full(m, policy: ConstraintPolicy) -> np.ndarray:
    """Rescale the whole matrix by its 1-norm.

    Variant A: ``b * W / max(1, ||W||_1)``.  Variant B: ``W / max(1, ||W||_1 / b)``.
    ``b`` is the per-layer budget.
    """
    m = as_matrix(m)
    b = policy.layer_budget
    n = one_norm(m)
    if policy.scheme is Scheme.ONE_NORM_FULL_A:
        return m * (b / float(_shrink(n)))
    if policy.scheme is Scheme.ONE_NORM_FULL_B:
        return m / float(_shrink(n / b))
    raise ConfigError(f"normalize_full needs a full-matrix scheme, got {policy.scheme.value}")


def _scale_columns(m: np.ndarray, b: float) -> np.ndarray:
    return m / _shrink(column_abs_sums(m) / b)


def normalize_columnwise(m, policy: ConstraintPolicy) -> np.ndarray:
    """Divide every column whose absolute sum exceeds the budget by ``sum / budget``."""
    if policy.scheme is not Scheme.ONE_NORM_COLUMNWISE:
        raise ConfigError(f"normalize_columnwise needs the columnwise scheme, got {policy.scheme.value}")
    return _scale_columns(as_matrix(m), policy.layer_budget)


def _clip_entries(m: np.ndarray, b: float) -> np.ndarray:
    return m / _shrink(np.abs(m) / b)


def _scale_rows(m: np.ndarray, b: float) -> np.ndarray:
    return m / _shrink(row_abs_sums(m) / b)[:, None]


def normalize_inf_scheme(layers: Sequence, lam: float) -> list[np.ndarray]:
    """Entry-wise bound on the first layer, row-sum bound on the rest, each at ``lam ** (1/D)``."""
    if len(layers) == 0:
        raise ConfigError("normalize_inf_scheme needs at least one layer")
    b = _budget(lam, len(layers))
    out = [_clip_entries(as_matrix(layers[0]), b)]
    out.extend(_scale_rows(as_matrix(w), b) for w in layers[1:])
    return out


def normalize_layer(m, index: int, policy: ConstraintPolicy) -> np.ndarray:
    """Normalization map of layer ``index`` (0-based) under ``policy``."""
    m = as_matrix(m)
    s = policy.scheme
    if s is Scheme.ONE_NORM_COLUMNWISE:
        return _scale_columns(m, policy.layer_budget)
    if s in (Scheme.ONE_NORM_FULL_A, Scheme.ONE_NORM_FULL_B):
        return normalize_full(m, policy)
    if index == 0:
        return _clip_entries(m, policy.layer_budget)
    return _scale_rows(m, policy.layer_budget)


def project_layer(m, index: int, policy: ConstraintPolicy) -> np.ndarray:
    """Map infeasible weights back onto the feasible set; feasible weights are returned unchanged.

    Variant A is a reparametrization rather than a projection (it rescales
    feasible matrices when the budget is not 1), so projection uses the
    variant-B map, which has the same feasible set.
    """
    if policy.scheme is Scheme.ONE_NORM_FULL_A:
        m = as_matrix(m)
        return m / float(_shrink(one_norm(m) / policy.layer_budget))
    return normalize_layer(m, index, policy)


def normalize_layer_vjp(m, index: int, policy: ConstraintPolicy, grad) -> np.ndarray:
    """Pull ``grad`` (w.r.t. the normalized matrix) back to the raw matrix.

    At a kink of ``max(1, .)`` the unscaled branch is used.  The derivative of
    ``|w|`` at zero is taken as zero and ties in a max pick the first index.
    """
    m = as_matrix(m)
    grad = np.asarray(grad, dtype=np.float64)
    b = policy.layer_budget
    s = policy.scheme
    if s is Scheme.ONE_NORM_COLUMNWISE:
        return _scale_columns_vjp(m, b, grad)
    if s in (Scheme.ONE_NORM_FULL_A, Scheme.ONE_NORM_FULL_B):
        sums = column_abs_sums(m)
        k = int(np.argmax(sums))
        n = float(sums[k])
        if s is Scheme.ONE_NORM_FULL_A:
            if n <= 1.0 + FEASIBLE_RTOL:
                return b * grad
            out = (b / n) * grad
            out[:, k] -= (b / n**2) * float(np.sum(grad * m)) * np.sign(m[:, k])
            return out
        if n / b <= 1.0 + FEASIBLE_RTOL:
            return grad.copy()
        c = n / b
        out = grad / c
        out[:, k] -= float(np.sum(grad * m)) / (c * n) * np.sign(m[:, k])
        return out
    if index == 0:
        return np.where(np.abs(m) / b > 1.0 + FEASIBLE_RTOL, 0.0, grad)
    return _scale_columns_vjp(m.T, b, grad.T).T


def _scale_columns_vjp(m: np.ndarray, b: float, grad: np.ndarray) -> np.ndarray:
    sums = column_abs_sums(m)
    c = sums / b
    active = c > 1.0 + FEASIBLE_RTOL
    out = grad.copy()
    if np.any(active):
        ca = c[active]
        g = grad[:, active]
        w = m[:, active]
        dot = np.sum(g * w, axis=0)
        out[:, active] = g / ca - np.sign(w) * (dot / (ca * sums[active]))
    return out


# --------------------------------------------------------------------------- #
# certificate
# --------------------------------------------------------------------------- #


def layer_norm(m, index: int, scheme: Scheme) -> float:
    """The norm of layer ``index`` that enters the certificate product."""
    if Scheme(scheme) is Scheme.INF_NORM:
        return max_abs(m) if index == 0 else inf_norm(m)
    return one_norm(m)


def layer_norms(layers: Sequence, policy: ConstraintPolicy) -> list[float]:
    return [layer_norm(w, i, policy.scheme) for i, w in enumerate(layers)]


def certificate(layers: Sequence, policy: ConstraintPolicy) -> float:
    """Product of layer norms: a provable L1 Lipschitz bound of the network."""
    return float(np.prod(layer_norms(layers, policy)))
