# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batched solver for many small dense complex systems.

Gaussian elimination with partial pivoting, one system at a time, no
LAPACK call overhead.  Same contract as ``_pykernels.solve_batched``.
"""
import numpy as np
from libc.math cimport fabs


cdef inline double cabs1(double complex z) nogil:
    return fabs(z.real) + fabs(z.imag)


cdef int _solve_one(double complex* A, double complex* X, Py_ssize_t m,
                    Py_ssize_t r) noexcept nogil:
    # A is m x m and X is m x r, both row-major; overwritten in place
    cdef Py_ssize_t k, row, col, piv, j
    cdef double best, cur
    cdef double complex tmp, factor, inv
    for k in range(m):
        piv = k
        best = cabs1(A[k * m + k])
        for row in range(k + 1, m):
            cur = cabs1(A[row * m + k])
            if cur > best:
                best = cur
                piv = row
        if best == 0.0:
            return 1
        if piv != k:
            for col in range(m):
                tmp = A[k * m + col]
                A[k * m + col] = A[piv * m + col]
                A[piv * m + col] = tmp
            for col in range(r):
                tmp = X[k * r + col]
                X[k * r + col] = X[piv * r + col]
                X[piv * r + col] = tmp
        inv = 1.0 / A[k * m + k]
        for row in range(k + 1, m):
            factor = A[row * m + k] * inv
            if factor != 0:
                for col in range(k + 1, m):
                    A[row * m + col] -= factor * A[k * m + col]
                for col in range(r):
                    X[row * r + col] -= factor * X[k * r + col]
    for k in range(m - 1, -1, -1):
        inv = 1.0 / A[k * m + k]
        for col in range(r):
            tmp = X[k * r + col]
            for j in range(k + 1, m):
                tmp = tmp - A[k * m + j] * X[j * r + col]
            X[k * r + col] = tmp * inv
    return 0


def solve_batched(a, b):
    A_arr = np.array(a, dtype=np.complex128, order="C", copy=True)
    X_arr = np.array(b, dtype=np.complex128, order="C", copy=True)
    if (A_arr.ndim != 3 or X_arr.ndim != 3 or A_arr.shape[1] != A_arr.shape[2]
            or X_arr.shape[0] != A_arr.shape[0] or X_arr.shape[1] != A_arr.shape[1]):
        raise ValueError("shape mismatch: need a (n, m, m) and b (n, m, r)")
    cdef Py_ssize_t n = A_arr.shape[0], m = A_arr.shape[1], r = X_arr.shape[2]
    if n == 0 or m == 0 or r == 0:
        return X_arr
    cdef double complex[:, :, ::1] A = A_arr
    cdef double complex[:, :, ::1] X = X_arr
    cdef Py_ssize_t i
    cdef int singular = 0
    with nogil:
        for i in range(n):
            if _solve_one(&A[i, 0, 0], &X[i, 0, 0], m, r):
                singular = 1
                break
    if singular:
        raise np.linalg.LinAlgError("Singular matrix")
    return X_arr
