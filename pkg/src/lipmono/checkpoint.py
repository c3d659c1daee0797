"""Plain-text checkpoints (``LMN v1``).

Layout: a header line, then ``key = value`` lines.  Numbers use 17
significant digits, which round-trips every float64 exactly.  Weights are
written as the matrices the model evaluates with (normalization already
applied), so a checkpoint certifies from its own contents::

    LMN v1
    kind = monotone
    lambda = 1
    scheme = one_norm_columnwise
    mode = project
    trained_mode = forward
    depth = 2
    directions = 1 0
    layer.0 = in=2 out=4 activation=groupsort group=2
    layer.0.weights = <row-major values>
    layer.0.bias = <values>
    layer.1 = in=4 out=1 activation=identity
    ...
    meta.feature_names = x,z

Householder layers add ``layer.<i>.reflection``.  ``meta.*`` lines carry
preprocessing statistics and are optional.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from . import monotone as _mono
from . import network as _net
from .activations import ActivationKind, ActivationSpec
from .errors import CheckpointError
from .monotone import MonotoneMask, MonotoneModel
from .network import Layer, Network
from .norms import ConstraintPolicy

HEADER = "LMN v1"

Model = Union[Network, MonotoneModel]


def fmt_floats(values) -> str:
    return " ".join(format(float(v), ".17g") for v in np.asarray(values).reshape(-1))


def parse_floats(text: str) -> np.ndarray:
    return np.array([float(t) for t in text.split()], dtype=np.float64)


@dataclass
class Checkpoint:
    model: Model
    meta: dict[str, str] = field(default_factory=dict)
    trained_mode: str = ""

    @property
    def core(self) -> Network:
        return self.model.core if isinstance(self.model, MonotoneModel) else self.model

    def meta_floats(self, key: str) -> np.ndarray | None:
        return parse_floats(self.meta[key]) if key in self.meta else None


def dumps(model: Model, meta: dict[str, str] | None = None) -> str:
    """Serialize the frozen form of ``model``."""
    mono = isinstance(model, MonotoneModel)
    core = model.core if mono else model
    frozen = _net.freeze(core)
    pol = frozen.policy
    lines = [
        HEADER,
        f"kind = {'monotone' if mono else 'network'}",
        f"lambda = {pol.lam:.17g}",
        f"scheme = {pol.scheme.value}",
        f"mode = {pol.mode.value}",
        f"trained_mode = {core.policy.mode.value}",
        f"depth = {pol.depth}",
    ]
    if mono:
        lines.append(f"directions = {' '.join(str(int(d)) for d in model.mask.directions)}")
    for i, layer in enumerate(frozen.layers):
        act = layer.activation
        desc = f"layer.{i} = in={layer.n_in} out={layer.n_out} activation={act.kind.value}"
        if act.kind is ActivationKind.GROUPSORT:
            desc += f" group={act.group_size}"
        lines.append(desc)
        lines.append(f"layer.{i}.weights = {fmt_floats(layer.weights)}")
        lines.append(f"layer.{i}.bias = {fmt_floats(layer.bias)}")
        if act.kind is ActivationKind.HOUSEHOLDER:
            lines.append(f"layer.{i}.reflection = {fmt_floats(act.reflection)}")
    for k, v in (meta or {}).items():
        if "\n" in str(v):
            raise CheckpointError(f"metadata value for {k!r} spans several lines")
        lines.append(f"meta.{k} = {v}")
    return "\n".join(lines) + "\n"


def save(path, model: Model, meta: dict[str, str] | None = None) -> Model:
    """Write a checkpoint; returns the frozen model that the file reproduces bit-for-bit."""
    text = dumps(model, meta)
    Path(path).write_text(text, encoding="utf-8")
    return loads(text).model


def loads(text: str) -> Checkpoint:
    lines = text.splitlines()
    if not lines or lines[0].strip() != HEADER:
        raise CheckpointError(f"missing '{HEADER}' header")
    kv: dict[str, str] = {}
    meta: dict[str, str] = {}
    for no, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        if "=" not in line:
            raise CheckpointError(f"line {no}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key.startswith("meta."):
            meta[key[5:]] = val
        else:
            kv[key] = val
    try:
        depth = int(kv["depth"])
        policy = ConstraintPolicy(kv["scheme"], kv["mode"], float(kv["lambda"]), depth)
        layers = []
        for i in range(depth):
            desc = dict(tok.split("=", 1) for tok in kv[f"layer.{i}"].split())
            n_in, n_out = int(desc["in"]), int(desc["out"])
            kind = ActivationKind(desc["activation"])
            W = parse_floats(kv[f"layer.{i}.weights"])
            b = parse_floats(kv[f"layer.{i}.bias"])
            if W.size != n_in * n_out:
                raise CheckpointError(f"layer {i}: expected {n_in * n_out} weights, found {W.size}")
            if kind is ActivationKind.HOUSEHOLDER:
                spec = ActivationSpec(kind, reflection=parse_floats(kv[f"layer.{i}.reflection"]))
            else:
                spec = ActivationSpec(kind, group_size=int(desc.get("group", 2)))
            layers.append(Layer(W.reshape(n_out, n_in), b, spec))
        net = Network(layers, policy)
        if kv.get("kind", "network") == "monotone":
            directions = np.array([int(t) for t in kv["directions"].split()], dtype=np.int64)
            model: Model = MonotoneModel(net, MonotoneMask(directions))
        else:
            model = net
    except CheckpointError:
        raise
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"malformed checkpoint: {exc}") from None
    return Checkpoint(model, meta, kv.get("trained_mode", kv["mode"]))


def load(path) -> Checkpoint:
    return loads(Path(path).read_text(encoding="utf-8"))


def freeze(model: Model) -> Model:
    return _mono.freeze(model) if isinstance(model, MonotoneModel) else _net.freeze(model)


__all__ = ["Checkpoint", "HEADER", "dumps", "freeze", "load", "loads", "save"]
