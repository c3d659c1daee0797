"""Gradient-norm-preserving activations and their vector-Jacobian products.

All functions accept a single vector or a batch with samples along axis 0;
the activation acts on the last axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError, ShapeError

UNIT_TOL = 1e-12


class ActivationKind(str, Enum):
    GROUPSORT = "groupsort"
    HOUSEHOLDER = "householder"
    IDENTITY = "identity"
    # baseline only: not gradient-norm-preserving
    RELU = "relu"


@dataclass
class ActivationSpec:
    kind: ActivationKind = ActivationKind.GROUPSORT
    group_size: int = 2
    reflection: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.kind = ActivationKind(self.kind)
        if self.kind is ActivationKind.GROUPSORT and self.group_size < 1:
            raise ConfigError(f"group size must be positive, got {self.group_size}")
        if self.kind is ActivationKind.HOUSEHOLDER:
            if self.reflection is None:
                raise ConfigError("householder activation needs a reflection vector")
            self.reflection = np.ascontiguousarray(self.reflection, dtype=np.float64)
            _check_unit(self.reflection)

    def check_width(self, width: int) -> None:
        if self.kind is ActivationKind.GROUPSORT and width % self.group_size:
            raise ShapeError(f"width {width} is not divisible by group size {self.group_size}")
        if self.kind is ActivationKind.HOUSEHOLDER and self.reflection.shape != (width,):
            raise ShapeError(f"reflection has length {self.reflection.shape[0]}, layer width is {width}")


def _check_unit(v: np.ndarray) -> None:
    if v.ndim != 1 or abs(float(np.linalg.norm(v)) - 1.0) > UNIT_TOL:
        raise ConfigError("householder reflection must be a unit vector")


def _blocks(x: np.ndarray, G: int) -> np.ndarray:
    if x.shape[-1] % G:
        raise ShapeError(f"length {x.shape[-1]} is not divisible by group size {G}")
    return x.reshape(x.shape[:-1] + (x.shape[-1] // G, G))


def groupsort_perm(x, G: int) -> np.ndarray:
    """Source index of every output entry; ties keep index order."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(_blocks(x, G), axis=-1, kind="stable")
    offsets = np.arange(0, x.shape[-1], G).reshape(-1, 1)
    return (order + offsets).reshape(x.shape)


def groupsort(x, G: int = 2) -> np.ndarray:
    """Sort each contiguous block of ``G`` entries ascending."""
    x = np.asarray(x, dtype=np.float64)
    return np.sort(_blocks(x, G), axis=-1).reshape(x.shape)


def groupsort_vjp(x, upstream, G: int = 2) -> np.ndarray:
    """Route each upstream entry back to the input position it was sorted from."""
    x = np.asarray(x, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != x.shape:
        raise ShapeError(f"upstream shape {upstream.shape} does not match input {x.shape}")
    perm = groupsort_perm(x, G)
    out = np.empty_like(upstream)
    np.put_along_axis(out, perm, upstream, axis=-1)
    return out


def householder(z, v) -> np.ndarray:
    """``z`` where ``z.v > 0``, otherwise the reflection ``z (I - 2 v v^T)``."""
    z = np.asarray(z, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    _check_unit(v)
    z2 = np.atleast_2d(z)
    s = z2 @ v
    coef = np.where(s <= 0.0, 2.0 * s, 0.0)
    return (z2 - coef[:, None] * v).reshape(z.shape)


def householder_vjp(z, v, upstream) -> np.ndarray:
    """Multiply ``upstream`` by the branch Jacobian (``I`` or the symmetric reflection)."""
    z = np.asarray(z, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    _check_unit(v)
    up2 = np.atleast_2d(np.asarray(upstream, dtype=np.float64))
    reflect = (np.atleast_2d(z) @ v) <= 0.0
    coef = np.where(reflect, 2.0 * (up2 @ v), 0.0)
    return (up2 - coef[:, None] * v).reshape(np.shape(upstream))


def relu(z) -> np.ndarray:
    return np.maximum(np.asarray(z, dtype=np.float64), 0.0)


def relu_vjp(z, upstream) -> np.ndarray:
    return np.where(np.asarray(z) > 0.0, upstream, 0.0)


def apply(spec: ActivationSpec, z) -> np.ndarray:
    if spec.kind is ActivationKind.GROUPSORT:
        return groupsort(z, spec.group_size)
    if spec.kind is ActivationKind.HOUSEHOLDER:
        return householder(z, spec.reflection)
    if spec.kind is ActivationKind.RELU:
        return relu(z)
    return np.array(z, dtype=np.float64)


def apply_vjp(spec: ActivationSpec, z, upstream) -> np.ndarray:
    if spec.kind is ActivationKind.GROUPSORT:
        return groupsort_vjp(z, upstream, spec.group_size)
    if spec.kind is ActivationKind.HOUSEHOLDER:
        return householder_vjp(z, spec.reflection, upstream)
    if spec.kind is ActivationKind.RELU:
        return relu_vjp(z, upstream)
    return np.array(upstream, dtype=np.float64)
