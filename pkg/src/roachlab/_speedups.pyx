# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled counterparts of the kernels in roachlab.kernels."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()


def tridiag_solve(double[::1] dl, double[::1] d, double[::1] du, b):
    """Thomas solve of one tridiagonal system; b is (m,) or (m, nrhs)."""
    b_arr = np.ascontiguousarray(b, dtype=np.float64)
    if b_arr.ndim == 1:
        x = np.empty_like(b_arr)
        _thomas_single(dl, d, du, b_arr, x)
        return x
    if b_arr.ndim != 2:
        raise ValueError("rhs must be 1- or 2-dimensional")
    x2 = np.empty_like(b_arr)
    _thomas_multi(dl, d, du, b_arr, x2)
    return x2


cdef void _thomas_single(double[::1] dl, double[::1] d, double[::1] du,
                         double[::1] b, double[::1] x):
    cdef Py_ssize_t m = d.shape[0]
    cdef Py_ssize_t i
    cdef double denom
    cdef double[::1] cp = np.empty(m - 1)
    cp[0] = du[0] / d[0]
    x[0] = b[0] / d[0]
    for i in range(1, m):
        denom = d[i] - dl[i - 1] * cp[i - 1]
        if i < m - 1:
            cp[i] = du[i] / denom
        x[i] = (b[i] - dl[i - 1] * x[i - 1]) / denom
    for i in range(m - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]


cdef void _thomas_multi(double[::1] dl, double[::1] d, double[::1] du,
                        double[:, ::1] b, double[:, ::1] x):
    cdef Py_ssize_t m = d.shape[0]
    cdef Py_ssize_t nrhs = b.shape[1]
    cdef Py_ssize_t i, j
    cdef double denom
    cdef double[::1] cp = np.empty(m - 1)
    cdef double[::1] dp = np.empty(m)
    cp[0] = du[0] / d[0]
    dp[0] = d[0]
    for i in range(1, m):
        denom = d[i] - dl[i - 1] * cp[i - 1]
        dp[i] = denom
        if i < m - 1:
            cp[i] = du[i] / denom
    for j in range(nrhs):
        x[0, j] = b[0, j] / dp[0]
    for i in range(1, m):
        for j in range(nrhs):
            x[i, j] = (b[i, j] - dl[i - 1] * x[i - 1, j]) / dp[i]
    for i in range(m - 2, -1, -1):
        for j in range(nrhs):
            x[i, j] -= cp[i] * x[i + 1, j]


def tridiag_solve_batch(double[:, ::1] dl, double[:, ::1] d, double[:, ::1] du,
                        double[:, ::1] b):
    """Thomas solve of B independent systems; bands (B, m-1)/(B, m), rhs (B, m)."""
    cdef Py_ssize_t B = b.shape[0]
    cdef Py_ssize_t m = b.shape[1]
    cdef Py_ssize_t k, i
    cdef double denom
    out = np.empty((B, m))
    cdef double[:, ::1] x = out
    cdef double[::1] cp = np.empty(m - 1)
    for k in range(B):
        cp[0] = du[k, 0] / d[k, 0]
        x[k, 0] = b[k, 0] / d[k, 0]
        for i in range(1, m):
            denom = d[k, i] - dl[k, i - 1] * cp[i - 1]
            if i < m - 1:
                cp[i] = du[k, i] / denom
            x[k, i] = (b[k, i] - dl[k, i - 1] * x[k, i - 1]) / denom
        for i in range(m - 2, -1, -1):
            x[k, i] -= cp[i] * x[k, i + 1]
    return out


def exchange_relax(u1, u2, qv, pv, double c):
    """Exact frozen-v exchange relaxation; see the numpy twin for the contract."""
    u1_arr = np.ascontiguousarray(u1, dtype=np.float64)
    shape = u1_arr.shape
    cdef double[::1] a = u1_arr.reshape(-1)
    cdef double[::1] bb = np.ascontiguousarray(u2, dtype=np.float64).reshape(-1)
    cdef double[::1] q = np.ascontiguousarray(qv, dtype=np.float64).reshape(-1)
    cdef double[::1] p = np.ascontiguousarray(pv, dtype=np.float64).reshape(-1)
    cdef Py_ssize_t n = a.shape[0]
    out1 = np.empty(n)
    out2 = np.empty(n)
    cdef double[::1] o1 = out1
    cdef double[::1] o2 = out2
    cdef Py_ssize_t i
    cdef double total, s, w
    for i in range(n):
        total = p[i] + q[i]
        s = a[i] + bb[i]
        w = (q[i] * a[i] - p[i] * bb[i]) * exp(-c * total)
        o1[i] = (p[i] * s + w) / total
        o2[i] = (q[i] * s - w) / total
    return out1.reshape(shape), out2.reshape(shape)
