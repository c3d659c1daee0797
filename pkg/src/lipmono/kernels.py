"""Backend selection for the batch kernels.

The compiled Cython extension is preferred.  Set ``LIPMONO_PURE_PYTHON=1``
before import to force the numpy fallback, or call :func:`use_backend` at
runtime (tests and the benchmark do this to compare the two).
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_FUNCTIONS = (
    "linear_forward",
    "linear_backward",
    "groupsort_forward",
    "groupsort_backward",
    "householder_forward",
    "householder_backward",
    "relu_forward",
    "relu_backward",
)

BACKEND = ""


def available_backends() -> list[str]:
    return ["python"] + (["cython"] if _ckernels is not None else [])


def use_backend(name: str) -> None:
    global BACKEND
    if name == "cython":
        if _ckernels is None:
            raise ImportError("the compiled kernel extension lipmono._ckernels is not built")
        impl: ModuleType = _ckernels
    elif name == "python":
        impl = _pykernels
    else:
        raise ValueError(f"unknown backend {name!r}")
    g = globals()
    for fn in _FUNCTIONS:
        g[fn] = getattr(impl, fn)
    BACKEND = name


use_backend("python" if os.environ.get("LIPMONO_PURE_PYTHON") == "1" or _ckernels is None else "cython")
