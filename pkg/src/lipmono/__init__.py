"""Monotone Lipschitz networks: L1-constrained fully connected networks with a monotone residual term."""

from .activations import ActivationKind, ActivationSpec
from .monotone import MonotoneMask, MonotoneModel, lipschitz_summary, monotone_forward, monotone_grad
from .network import Layer, Network, backward, build_network, forward, freeze, input_jacobian_bound
from .norms import ConstraintPolicy, Mode, Scheme, certificate
from .optim import AdamState, LossKind, TrainConfig, fit
from .verify import audit_monotonicity, certify, empirical_lipschitz, finite_diff_grad

__version__ = "0.1.0"

__all__ = [
    "ActivationKind",
    "ActivationSpec",
    "AdamState",
    "ConstraintPolicy",
    "Layer",
    "LossKind",
    "Mode",
    "MonotoneMask",
    "MonotoneModel",
    "Network",
    "Scheme",
    "TrainConfig",
    "audit_monotonicity",
    "backward",
    "build_network",
    "certificate",
    "certify",
    "empirical_lipschitz",
    "finite_diff_grad",
    "fit",
    "forward",
    "freeze",
    "input_jacobian_bound",
    "lipschitz_summary",
    "monotone_forward",
    "monotone_grad",
]
