import os
from pathlib import Path

import numpy as np
import pytest

from lipmono import kernels
from lipmono.activations import ActivationKind, ActivationSpec
from lipmono.network import Layer, Network, build_network
from lipmono.norms import ConstraintPolicy

ROOT = Path(__file__).resolve().parents[1]
DATA_DIR = Path(os.environ.get("LIPMONO_DATA_DIR", ROOT / "data"))

# filled by test_acceptance: criterion number -> (passed, detail)
ACCEPTANCE: dict[int, tuple[str, str]] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    previous = kernels.BACKEND
    kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(previous)


def linear_net(W, b=None, lam=1.0, scheme="one_norm_columnwise", mode="forward") -> Network:
    W = np.atleast_2d(np.asarray(W, dtype=np.float64))
    b = np.zeros(W.shape[0]) if b is None else b
    return Network([Layer(W, b)], ConstraintPolicy(scheme, mode, lam, 1))


def random_net(rng, widths, activation="groupsort", lam=1.0, scheme="one_norm_columnwise", mode="forward", scale=1.0):
    """Net with raw gaussian weights (possibly infeasible) and random biases."""
    layers = []
    depth = len(widths) - 1
    for i, (n_in, n_out) in enumerate(zip(widths, widths[1:])):
        if i == depth - 1:
            spec = ActivationSpec(ActivationKind.IDENTITY)
        elif activation == "householder":
            v = rng.standard_normal(n_out)
            spec = ActivationSpec(ActivationKind.HOUSEHOLDER, reflection=v / np.linalg.norm(v))
        else:
            spec = ActivationSpec(activation)
        layers.append(Layer(scale * rng.standard_normal((n_out, n_in)), rng.standard_normal(n_out), spec))
    return Network(layers, ConstraintPolicy(scheme, mode, lam, depth))


@pytest.fixture
def small_net():
    return build_network(3, (4, 4), 1, seed=7)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {detail}")
