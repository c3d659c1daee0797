"""Fully connected networks whose L1 Lipschitz constant is bounded by construction.

Layer ``l`` computes ``z_l = a_{l-1} @ W_l.T + b_l`` and ``a_l = act_l(z_l)``,
with ``a_0 = x`` and an identity activation on the last layer.  Under
``Mode.FORWARD_NORMALIZE`` every ``W_l`` is passed through its normalization
map before use and gradients flow through that map.  Under
``Mode.PROJECT_AFTER_STEP`` raw weights are used as stored; the optimizer keeps
them feasible.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels, norms
from .activations import ActivationKind, ActivationSpec
from .errors import CertificationError, ConfigError, ShapeError, StateError
from .norms import ConstraintPolicy, Mode, Scheme
from .tensor_core import make_rng

CERT_RTOL = 1e-9
INIT_FILL = 0.7


@dataclass
class Layer:
    weights: np.ndarray
    bias: np.ndarray
    activation: ActivationSpec = field(default_factory=lambda: ActivationSpec(ActivationKind.IDENTITY))

    def __post_init__(self):
        self.weights = np.array(self.weights, dtype=np.float64, order="C", ndmin=2)
        self.bias = np.array(self.bias, dtype=np.float64, ndmin=1)
        if self.bias.shape != (self.n_out,):
            raise ShapeError(f"bias has shape {self.bias.shape}, expected ({self.n_out},)")
        self.activation.check_width(self.n_out)

    @property
    def n_in(self) -> int:
        return self.weights.shape[1]

    @property
    def n_out(self) -> int:
        return self.weights.shape[0]


@dataclass
class Network:
    layers: list[Layer]
    policy: ConstraintPolicy

    def __post_init__(self):
        if not self.layers:
            raise ConfigError("a network needs at least one layer")
        if self.policy.depth != len(self.layers):
            raise ConfigError(f"policy depth {self.policy.depth} does not match {len(self.layers)} layers")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.n_out != nxt.n_in:
                raise ShapeError(f"layer widths do not chain: {prev.n_out} -> {nxt.n_in}")
        if self.layers[-1].activation.kind is not ActivationKind.IDENTITY:
            raise ConfigError("the output layer must use the identity activation")

    @property
    def input_dim(self) -> int:
        return self.layers[0].n_in

    @property
    def output_dim(self) -> int:
        return self.layers[-1].n_out

    @property
    def lam(self) -> float:
        return self.policy.lam

    def parameters(self) -> list[np.ndarray]:
        """Weight and bias arrays in layer order; the optimizer updates them in place."""
        out = []
        for layer in self.layers:
            out += [layer.weights, layer.bias]
        return out

    def n_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def effective_weights(self) -> list[np.ndarray]:
        """The matrices the forward pass actually multiplies by."""
        if self.policy.mode is Mode.PROJECT_AFTER_STEP:
            return [layer.weights for layer in self.layers]
        return [norms.normalize_layer(layer.weights, i, self.policy) for i, layer in enumerate(self.layers)]

    def certificate(self) -> float:
        return norms.certificate(self.effective_weights(), self.policy)

    def copy(self) -> "Network":
        return copy.deepcopy(self)

    def __call__(self, x) -> np.ndarray:
        return forward(self, x)[0]


@dataclass
class ForwardTape:
    inputs: list[np.ndarray]
    preacts: list[np.ndarray]
    aux: list
    weights: list[np.ndarray]
    squeeze: bool
    owner: int

    @property
    def depth(self) -> int:
        return len(self.preacts)


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    inputs: np.ndarray

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out


def _as_batch(net: Network, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    X = np.ascontiguousarray(x.reshape(1, -1) if squeeze else x)
    if X.ndim != 2 or X.shape[1] != net.input_dim:
        raise ShapeError(f"input has shape {x.shape}, network expects width {net.input_dim}")
    return X, squeeze


def _activate(spec: ActivationSpec, Z: np.ndarray):
    kind = spec.kind
    if kind is ActivationKind.GROUPSORT:
        return kernels.groupsort_forward(Z, spec.group_size)
    if kind is ActivationKind.HOUSEHOLDER:
        return kernels.householder_forward(Z, spec.reflection)
    if kind is ActivationKind.RELU:
        return kernels.relu_forward(Z)
    return Z, None


def _activate_vjp(spec: ActivationSpec, aux, dA: np.ndarray) -> np.ndarray:
    kind = spec.kind
    if kind is ActivationKind.GROUPSORT:
        return kernels.groupsort_backward(aux, dA)
    if kind is ActivationKind.HOUSEHOLDER:
        return kernels.householder_backward(aux, spec.reflection, dA)
    if kind is ActivationKind.RELU:
        return kernels.relu_backward(aux, dA)
    return dA


def forward(net: Network, x) -> tuple[np.ndarray, ForwardTape]:
    """Evaluate the network on one sample or a batch (rows); returns the output and the tape."""
    A, squeeze = _as_batch(net, x)
    weights = net.effective_weights()
    tape = ForwardTape([], [], [], weights, squeeze, id(net))
    for W, layer in zip(weights, net.layers):
        Z = kernels.linear_forward(A, W, layer.bias)
        tape.inputs.append(A)
        tape.preacts.append(Z)
        A, aux = _activate(layer.activation, Z)
        tape.aux.append(aux)
    return (A[0] if squeeze else A), tape


def backward(net: Network, tape: ForwardTape, grad_out) -> Gradients:
    """Gradients of ``sum(y * grad_out)`` w.r.t. raw weights, biases and the input."""
    if tape.owner != id(net) or tape.depth != len(net.layers):
        raise StateError("tape was not produced by this network")
    dA = np.asarray(grad_out, dtype=np.float64)
    dA = np.ascontiguousarray(dA.reshape(1, -1) if tape.squeeze else dA)
    if dA.shape != tape.preacts[-1].shape:
        raise ShapeError(f"grad_out has shape {np.shape(grad_out)}, output is {tape.preacts[-1].shape}")
    depth = len(net.layers)
    dWs: list[np.ndarray] = [None] * depth
    dbs: list[np.ndarray] = [None] * depth
    for i in range(depth - 1, -1, -1):
        layer = net.layers[i]
        dZ = np.ascontiguousarray(_activate_vjp(layer.activation, tape.aux[i], dA))
        dW, db, dA = kernels.linear_backward(tape.inputs[i], tape.weights[i], dZ, True)
        if net.policy.mode is Mode.FORWARD_NORMALIZE:
            dW = norms.normalize_layer_vjp(layer.weights, i, net.policy, dW)
        dWs[i] = dW
        dbs[i] = db
    return Gradients(dWs, dbs, dA[0] if tape.squeeze else dA)


def input_jacobian_bound(net: Network) -> tuple[float, float]:
    """Certified bound on every input partial derivative, and the certificate it rests on."""
    cert = net.certificate()
    if cert > net.lam * (1.0 + CERT_RTOL):
        raise CertificationError(f"certificate {cert!r} exceeds lambda {net.lam!r}")
    return net.lam, cert


def enforce_constraints(net: Network) -> Network:
    """Project every layer onto its feasible set in place; feasible layers are left bit-identical."""
    for i, layer in enumerate(net.layers):
        layer.weights[...] = norms.project_layer(layer.weights, i, net.policy)
    return net


def freeze(net: Network) -> Network:
    """Copy with the effective weights stored as raw weights, evaluated in projection mode.

    The result computes bit-for-bit the same function and certifies from its
    stored weights alone.
    """
    out = net.copy()
    for layer, W in zip(out.layers, net.effective_weights()):
        layer.weights = np.array(W)
    out.policy = ConstraintPolicy(net.policy.scheme, Mode.PROJECT_AFTER_STEP, net.policy.lam, net.policy.depth)
    return out


def _init_weights(rng: np.random.Generator, n_out: int, n_in: int, index: int, policy: ConstraintPolicy) -> np.ndarray:
    g = rng.standard_normal((max(n_out, n_in), min(n_out, n_in)))
    q, r = np.linalg.qr(g)
    q *= np.sign(np.diag(r))
    W = q if n_out >= n_in else q.T
    target = INIT_FILL * policy.layer_budget
    if policy.scheme is Scheme.INF_NORM:
        if index == 0:
            return W * (target / np.abs(W).max())
        return W * (target / np.abs(W).sum(axis=1))[:, None]
    return W * (target / np.abs(W).sum(axis=0))


def build_network(
    input_dim: int,
    hidden: Sequence[int] = (16, 16),
    output_dim: int = 1,
    activation: str = "groupsort",
    group_size: int = 2,
    lam: float = 1.0,
    scheme: str = Scheme.ONE_NORM_COLUMNWISE,
    mode: str = Mode.FORWARD_NORMALIZE,
    seed: int = 0,
) -> Network:
    """Random network whose layers start strictly inside their norm budgets."""
    widths = [int(input_dim), *map(int, hidden), int(output_dim)]
    if min(widths) < 1:
        raise ConfigError(f"widths must be positive, got {widths}")
    policy = ConstraintPolicy(scheme, mode, lam, len(widths) - 1)
    rng = make_rng(seed)
    kind = ActivationKind(activation)
    layers = []
    for i, (n_in, n_out) in enumerate(zip(widths, widths[1:])):
        W = _init_weights(rng, n_out, n_in, i, policy)
        last = i == len(widths) - 2
        if last:
            spec = ActivationSpec(ActivationKind.IDENTITY)
        elif kind is ActivationKind.HOUSEHOLDER:
            v = rng.standard_normal(n_out)
            spec = ActivationSpec(kind, reflection=v / np.linalg.norm(v))
        else:
            spec = ActivationSpec(kind, group_size=group_size)
        layers.append(Layer(W, np.zeros(n_out), spec))
    return Network(layers, policy)
