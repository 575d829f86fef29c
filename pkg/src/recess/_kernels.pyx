# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: a hand-rolled GEMM driving the separable 2-D transform.

The inner loops are written axpy-style (the innermost index walks a contiguous
output row) so the C compiler can vectorize them without reassociating sums.
"""

import numpy as np

BACKEND_NAME = "compiled"


cdef void _matmul_into(const double[:, ::1] a, const double[:, ::1] b,
                       double[:, ::1] out) noexcept nogil:
    # out[i, j] = sum_k a[i, k] * b[k, j]; out must arrive zeroed.
    cdef Py_ssize_t m = a.shape[0], p = a.shape[1], n = b.shape[1]
    cdef Py_ssize_t i, k, j
    cdef double c
    for i in range(m):
        for k in range(p):
            c = a[i, k]
            for j in range(n):
                out[i, j] += c * b[k, j]


def matmul(a, b):
    """C-contiguous float64 matrix product."""
    cdef const double[:, ::1] av = a
    cdef const double[:, ::1] bv = b
    if av.shape[1] != bv.shape[0]:
        raise ValueError("inner dimensions do not match")
    out = np.zeros((av.shape[0], bv.shape[1]), dtype=np.float64)
    cdef double[:, ::1] ov = out
    with nogil:
        _matmul_into(av, bv, ov)
    return out


def sandwich(a, x, b):
    """Triple product a @ x @ b, the separable-transform workhorse."""
    cdef const double[:, ::1] av = a
    cdef const double[:, ::1] xv = x
    cdef const double[:, ::1] bv = b
    if av.shape[1] != xv.shape[0] or xv.shape[1] != bv.shape[0]:
        raise ValueError("inner dimensions do not match")
    tmp = np.zeros((av.shape[0], xv.shape[1]), dtype=np.float64)
    out = np.zeros((av.shape[0], bv.shape[1]), dtype=np.float64)
    cdef double[:, ::1] tv = tmp
    cdef double[:, ::1] ov = out
    with nogil:
        _matmul_into(av, xv, tv)
        _matmul_into(tv, bv, ov)
    return out
