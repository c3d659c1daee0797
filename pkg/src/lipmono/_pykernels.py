"""Pure numpy implementation of the batch kernels.

Used when the compiled ``_ckernels`` extension is missing or when
``LIPMONO_PURE_PYTHON=1`` is set.  Every function here has a twin with the
same signature in ``_ckernels.pyx``.  Batches are C-contiguous float64 arrays
with one sample per row.  Weights have shape ``(n_out, n_in)``.
"""

import numpy as np


def linear_forward(A, W, b):
    """Return ``A @ W.T + b``."""
    out = A @ W.T
    out += b
    return out


def linear_backward(A, W, dZ, input_grad=True):
    """Gradients of ``sum(dZ * (A @ W.T + b))`` w.r.t. ``W``, ``b`` and ``A``."""
    dW = dZ.T @ A
    db = dZ.sum(axis=0)
    dA = dZ @ W if input_grad else None
    return dW, db, dA


def groupsort_forward(Z, G):
    """Sorted batch and, per output slot, the column it was taken from."""
    n, width = Z.shape
    if G == 2:
        lo = Z[:, 0::2]
        hi = Z[:, 1::2]
        swap = lo > hi
        Y = np.empty_like(Z)
        Y[:, 0::2] = np.where(swap, hi, lo)
        Y[:, 1::2] = np.where(swap, lo, hi)
        base = np.arange(0, width, 2)
        perm = np.empty((n, width), dtype=np.intp)
        perm[:, 0::2] = base + swap
        perm[:, 1::2] = base + ~swap
        return Y, perm
    blocks = Z.reshape(n, width // G, G)
    order = np.argsort(blocks, axis=-1, kind="stable")
    perm = (order + np.arange(0, width, G).reshape(-1, 1)).reshape(n, width)
    return np.take_along_axis(Z, perm, axis=1), perm


def groupsort_backward(perm, dY):
    dZ = np.empty_like(dY)
    np.put_along_axis(dZ, perm, dY, axis=1)
    return dZ


def householder_forward(Z, v):
    s = Z @ v
    reflect = s <= 0.0
    Y = Z - np.where(reflect, 2.0 * s, 0.0)[:, None] * v
    return Y, reflect


def householder_backward(reflect, v, dY):
    return dY - np.where(reflect, 2.0 * (dY @ v), 0.0)[:, None] * v


def relu_forward(Z):
    mask = Z > 0.0
    return np.where(mask, Z, 0.0), mask


def relu_backward(mask, dY):
    return np.where(mask, dY, 0.0)
