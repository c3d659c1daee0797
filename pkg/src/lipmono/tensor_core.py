"""Dense float64 helpers and the seeded random stream.

Matrices and vectors are plain ``numpy.ndarray`` objects of dtype float64.
Products follow the row-vector convention: a vector ``v`` multiplies a
matrix from the left, ``v @ m``.

Random numbers come from the Philox-4x64 counter-based generator shipped with
numpy.  Its output stream is a pure function of the key and counter, so the
same seed yields the same bits on every platform.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import RangeError, ShapeError

RNG_ALGORITHM = "philox4x64-10"


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    arr = np.ascontiguousarray(m, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ShapeError(f"{name} must be a nonempty 2-D array, got shape {arr.shape}")
    return arr


def as_vector(v, name: str = "vector") -> np.ndarray:
    arr = np.ascontiguousarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ShapeError(f"{name} must be a nonempty 1-D array, got shape {arr.shape}")
    return arr


def check_finite(arr: np.ndarray, name: str = "array") -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def matvec(m, v) -> np.ndarray:
    """Row-vector product ``v @ m``; the result has ``m.shape[1]`` entries."""
    m = as_matrix(m)
    v = as_vector(v)
    if v.shape[0] != m.shape[0]:
        raise ShapeError(f"cannot multiply vector of length {v.shape[0]} by {m.shape[0]}x{m.shape[1]} matrix")
    return v @ m


def make_rng(seed: int, stream: int | None = None) -> np.random.Generator:
    """Philox generator for ``seed``; ``stream`` selects an independent substream."""
    if seed < 0 or seed >= 2**64:
        raise RangeError(f"seed must be a 64-bit unsigned integer, got {seed}")
    spawn_key = () if stream is None else (int(stream),)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=spawn_key)))


def rand_uniform(rng: np.random.Generator, n: int, lo: float, hi: float) -> np.ndarray:
    if not lo < hi:
        raise RangeError(f"empty range [{lo}, {hi})")
    if n < 0:
        raise RangeError(f"count must be nonnegative, got {n}")
    out = lo + (hi - lo) * rng.random(n)
    # lo + (hi - lo) * u can round up to hi for u just below 1
    return np.minimum(out, np.nextafter(hi, lo))


_BINARY: dict[str, Callable[[np.ndarray, np.ndarray], np.ndarray]] = {
    "add": np.add,
    "sub": np.subtract,
    "mul": np.multiply,
}


def elementwise(op: str, a, b) -> np.ndarray:
    """Apply ``add``, ``sub``, ``mul`` to equal-length vectors, or ``scale`` by a scalar ``b``."""
    a = np.asarray(a, dtype=np.float64)
    if op == "scale":
        if np.ndim(b) != 0:
            raise ShapeError("scale expects a scalar factor")
        fn, b = np.multiply, float(b)
    elif op in _BINARY:
        b = np.asarray(b, dtype=np.float64)
        if a.shape != b.shape:
            raise ShapeError(f"length mismatch: {a.shape} vs {b.shape}")
        fn = _BINARY[op]
    else:
        raise ValueError(f"unknown elementwise op {op!r}")
    # overflow is reported by check_finite below
    with np.errstate(over="ignore", invalid="ignore"):
        out = fn(a, b)
    return check_finite(out, f"{op} result")
