# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled batch kernels; same signatures and results as ``_pykernels``.

Row-major ``(n, k)`` arrays are handed to column-major BLAS as their
``(k, n)`` transposes, so no copies are made.
"""

import numpy as np

from scipy.linalg.cython_blas cimport dgemm


cdef void _gemm(char ta, char tb, int m, int n, int k, double *a, int lda,
                double *b, int ldb, double beta, double *c, int ldc) noexcept nogil:
    cdef double one = 1.0
    if m == 0 or n == 0:
        return
    dgemm(&ta, &tb, &m, &n, &k, &one, a, &lda, b, &ldb, &beta, c, &ldc)


def linear_forward(const double[:, ::1] A, const double[:, ::1] W, const double[::1] b):
    """Return ``A @ W.T + b``."""
    cdef int n = A.shape[0], n_in = A.shape[1], n_out = W.shape[0]
    if W.shape[1] != n_in or b.shape[0] != n_out:
        raise ValueError("linear_forward: shape mismatch")
    out = np.empty((n, n_out), dtype=np.float64)
    cdef double[:, ::1] Z = out
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(n_out):
            Z[i, j] = b[j]
    if n_in > 0:
        _gemm(b'T', b'N', n_out, n, n_in, <double *>&W[0, 0], n_in, <double *>&A[0, 0], n_in, 1.0, &Z[0, 0], n_out)
    return out


def linear_backward(const double[:, ::1] A, const double[:, ::1] W, const double[:, ::1] dZ, bint input_grad=True):
    """Gradients of ``sum(dZ * (A @ W.T + b))`` w.r.t. ``W``, ``b`` and ``A``."""
    cdef int n = A.shape[0], n_in = A.shape[1], n_out = W.shape[0]
    if W.shape[1] != n_in or dZ.shape[0] != n or dZ.shape[1] != n_out:
        raise ValueError("linear_backward: shape mismatch")
    dW_arr = np.zeros((n_out, n_in), dtype=np.float64)
    db_arr = np.zeros(n_out, dtype=np.float64)
    cdef double[:, ::1] dW = dW_arr
    cdef double[::1] db = db_arr
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(n_out):
            db[j] += dZ[i, j]
    if n > 0 and n_in > 0:
        _gemm(b'N', b'T', n_in, n_out, n, <double *>&A[0, 0], n_in, <double *>&dZ[0, 0], n_out, 0.0, &dW[0, 0], n_in)
    if not input_grad:
        return dW_arr, db_arr, None
    dA_arr = np.zeros((n, n_in), dtype=np.float64)
    cdef double[:, ::1] dA = dA_arr
    if n > 0 and n_in > 0 and n_out > 0:
        _gemm(b'N', b'N', n_in, n, n_out, <double *>&W[0, 0], n_in, <double *>&dZ[0, 0], n_out, 0.0, &dA[0, 0], n_in)
    return dW_arr, db_arr, dA_arr


def groupsort_forward(const double[:, ::1] Z, int G):
    """Sorted batch and, per output slot, the column it was taken from (stable on ties)."""
    cdef Py_ssize_t n = Z.shape[0], width = Z.shape[1]
    if G < 1 or width % G:
        raise ValueError("groupsort_forward: width must be a multiple of the group size")
    Y_arr = np.empty((n, width), dtype=np.float64)
    perm_arr = np.empty((n, width), dtype=np.intp)
    cdef double[:, ::1] Y = Y_arr
    cdef Py_ssize_t[:, ::1] perm = perm_arr
    cdef Py_ssize_t i, g, j, k, src
    cdef double val, lo, hi
    if G == 2:
        for i in range(n):
            for g in range(0, width, 2):
                lo = Z[i, g]
                hi = Z[i, g + 1]
                if lo > hi:
                    Y[i, g] = hi
                    Y[i, g + 1] = lo
                    perm[i, g] = g + 1
                    perm[i, g + 1] = g
                else:
                    Y[i, g] = lo
                    Y[i, g + 1] = hi
                    perm[i, g] = g
                    perm[i, g + 1] = g + 1
        return Y_arr, perm_arr
    for i in range(n):
        for g in range(0, width, G):
            # insertion sort; strict comparison keeps equal values in index order
            for j in range(G):
                val = Z[i, g + j]
                src = g + j
                k = j
                while k > 0 and Y[i, g + k - 1] > val:
                    Y[i, g + k] = Y[i, g + k - 1]
                    perm[i, g + k] = perm[i, g + k - 1]
                    k -= 1
                Y[i, g + k] = val
                perm[i, g + k] = src
    return Y_arr, perm_arr


def groupsort_backward(const Py_ssize_t[:, ::1] perm, const double[:, ::1] dY):
    cdef Py_ssize_t n = dY.shape[0], width = dY.shape[1], i, j
    out = np.empty((n, width), dtype=np.float64)
    cdef double[:, ::1] dZ = out
    for i in range(n):
        for j in range(width):
            dZ[i, perm[i, j]] = dY[i, j]
    return out


def householder_forward(const double[:, ::1] Z, const double[::1] v):
    cdef Py_ssize_t n = Z.shape[0], width = Z.shape[1], i, j
    if v.shape[0] != width:
        raise ValueError("householder_forward: reflection vector has the wrong length")
    Y_arr = np.empty((n, width), dtype=np.float64)
    reflect_arr = np.empty(n, dtype=np.bool_)
    cdef double[:, ::1] Y = Y_arr
    cdef unsigned char[::1] reflect = reflect_arr.view(np.uint8)
    cdef double s
    for i in range(n):
        s = 0.0
        for j in range(width):
            s += Z[i, j] * v[j]
        reflect[i] = s <= 0.0
        if reflect[i]:
            for j in range(width):
                Y[i, j] = Z[i, j] - 2.0 * s * v[j]
        else:
            for j in range(width):
                Y[i, j] = Z[i, j]
    return Y_arr, reflect_arr


def householder_backward(reflect_arr, const double[::1] v, const double[:, ::1] dY):
    cdef const unsigned char[::1] reflect = np.ascontiguousarray(reflect_arr).view(np.uint8)
    cdef Py_ssize_t n = dY.shape[0], width = dY.shape[1], i, j
    out = np.empty((n, width), dtype=np.float64)
    cdef double[:, ::1] dZ = out
    cdef double s
    for i in range(n):
        if reflect[i]:
            s = 0.0
            for j in range(width):
                s += dY[i, j] * v[j]
            for j in range(width):
                dZ[i, j] = dY[i, j] - 2.0 * s * v[j]
        else:
            for j in range(width):
                dZ[i, j] = dY[i, j]
    return out


def relu_forward(const double[:, ::1] Z):
    cdef Py_ssize_t n = Z.shape[0], width = Z.shape[1], i, j
    Y_arr = np.empty((n, width), dtype=np.float64)
    mask_arr = np.empty((n, width), dtype=np.bool_)
    cdef double[:, ::1] Y = Y_arr
    cdef unsigned char[:, ::1] mask = mask_arr.view(np.uint8)
    for i in range(n):
        for j in range(width):
            mask[i, j] = Z[i, j] > 0.0
            Y[i, j] = Z[i, j] if mask[i, j] else 0.0
    return Y_arr, mask_arr


def relu_backward(mask_arr, const double[:, ::1] dY):
    cdef const unsigned char[:, ::1] mask = np.ascontiguousarray(mask_arr).view(np.uint8)
    cdef Py_ssize_t n = dY.shape[0], width = dY.shape[1], i, j
    out = np.empty((n, width), dtype=np.float64)
    cdef double[:, ::1] dZ = out
    for i in range(n):
        for j in range(width):
            dZ[i, j] = dY[i, j] if mask[i, j] else 0.0
    return out
