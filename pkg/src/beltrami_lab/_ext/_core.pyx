# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loop for disk-averaged iterated differences."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, sqrt

cnp.import_array()


cdef inline void _axpy_shifted(double* acc, const double* row, Py_ssize_t n,
                               Py_ssize_t shift, double w) noexcept nogil:
    # acc[c] += w * row[(c + shift) mod n] on interleaved (re, im) pairs
    cdef Py_ssize_t c, split = n - shift
    cdef const double* src = row + 2 * shift
    for c in range(2 * split):
        acc[c] += w * src[c]
    src = row - 2 * split
    for c in range(2 * split, 2 * n):
        acc[c] += w * src[c]


def difference_disk_mean(const double complex[:, ::1] f, const double[:, ::1] offsets, int M):
    """Mean over ``offsets`` of ``|Delta^M_h f(x)|`` at every grid node.

    ``offsets[k] = (dx, dy)`` in grid units; off-lattice samples are bilinear
    and periodic.  ``n`` must be a power of two.
    """
    cdef Py_ssize_t n = f.shape[0]
    cdef Py_ssize_t K = offsets.shape[0]
    cdef Py_ssize_t mask = n - 1
    cdef Py_ssize_t r, c, k, j, r0, r1, c0, c1
    cdef double px, py, ax, ay, re, im
    cdef double[:, ::1] out = np.zeros((n, n), dtype=np.float64)
    cdef double[::1] acc = np.empty(2 * n)
    cdef double[::1] coef = np.empty(M + 1)
    cdef Py_ssize_t[::1] ci = np.empty(M + 1, dtype=np.intp)
    cdef Py_ssize_t[::1] ri = np.empty(M + 1, dtype=np.intp)
    cdef double[:, ::1] wts = np.empty((M + 1, 4))
    cdef double binom = 1.0
    cdef double sign
    cdef const double* base

    if n & mask:
        raise ValueError("grid size must be a power of two")
    if M < 1:
        raise ValueError("difference order must be >= 1")
    if K == 0:
        return np.asarray(out)

    for j in range(M + 1):
        sign = 1.0 if (M - j) % 2 == 0 else -1.0
        coef[j] = sign * binom
        binom = binom * (M - j) / (j + 1)

    base = <const double*> &f[0, 0]
    with nogil:
        for k in range(K):
            for j in range(M + 1):
                px = j * offsets[k, 0]
                py = j * offsets[k, 1]
                ax = floor(px)
                ay = floor(py)
                ci[j] = (<Py_ssize_t> ax) & mask
                ri[j] = (<Py_ssize_t> ay) & mask
                ax = px - ax
                ay = py - ay
                wts[j, 0] = coef[j] * (1.0 - ax) * (1.0 - ay)
                wts[j, 1] = coef[j] * ax * (1.0 - ay)
                wts[j, 2] = coef[j] * (1.0 - ax) * ay
                wts[j, 3] = coef[j] * ax * ay
            for r in range(n):
                for c in range(2 * n):
                    acc[c] = 0.0
                for j in range(M + 1):
                    r0 = (r + ri[j]) & mask
                    r1 = (r0 + 1) & mask
                    c0 = ci[j]
                    c1 = (c0 + 1) & mask
                    if wts[j, 0] != 0.0:
                        _axpy_shifted(&acc[0], base + 2 * n * r0, n, c0, wts[j, 0])
                    if wts[j, 1] != 0.0:
                        _axpy_shifted(&acc[0], base + 2 * n * r0, n, c1, wts[j, 1])
                    if wts[j, 2] != 0.0:
                        _axpy_shifted(&acc[0], base + 2 * n * r1, n, c0, wts[j, 2])
                    if wts[j, 3] != 0.0:
                        _axpy_shifted(&acc[0], base + 2 * n * r1, n, c1, wts[j, 3])
                for c in range(n):
                    re = acc[2 * c]
                    im = acc[2 * c + 1]
                    out[r, c] += sqrt(re * re + im * im)
        for r in range(n):
            for c in range(n):
                out[r, c] /= K
    return np.asarray(out)
