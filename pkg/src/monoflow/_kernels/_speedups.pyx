# cython: boundscheck=False, wraparound=False, cdivision=False
"""Compiled tridiagonal kernels; arithmetic matches _pure.py exactly."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def thomas_solve(lower, diag, upper, rhs, bint require_positive_pivots=True):
    """Solve tridiag(lower, diag, upper) x = rhs by the Thomas algorithm."""
    cdef const double[::1] lo = np.ascontiguousarray(lower, dtype=float)
    cdef const double[::1] d = np.ascontiguousarray(diag, dtype=float)
    cdef const double[::1] up = np.ascontiguousarray(upper, dtype=float)
    cdef const double[::1] b = np.ascontiguousarray(rhs, dtype=float)
    cdef Py_ssize_t n = d.shape[0]
    out = np.zeros(n, dtype=float)
    cdef double[::1] x = out
    cp_arr = np.zeros(n, dtype=float)
    dp_arr = np.zeros(n, dtype=float)
    cdef double[::1] cp = cp_arr
    cdef double[::1] dp = dp_arr
    cdef Py_ssize_t i
    cdef double piv
    piv = d[0]
    if require_positive_pivots and piv <= 0.0:
        raise ValueError("indefinite system")
    cp[0] = up[0] / piv if n > 1 else 0.0
    dp[0] = b[0] / piv
    for i in range(1, n):
        piv = d[i] - lo[i - 1] * cp[i - 1]
        if require_positive_pivots and piv <= 0.0:
            raise ValueError("indefinite system")
        cp[i] = up[i] / piv if i < n - 1 else 0.0
        dp[i] = (b[i] - lo[i - 1] * dp[i - 1]) / piv
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return out


def projected_sor(lower, diag, upper, rhs, lb, x0, double omega, double tol,
                  int max_iter):
    """Projected SOR for min 1/2 x'Ax - rhs'x subject to x >= lb."""
    cdef const double[::1] lo = np.ascontiguousarray(lower, dtype=float)
    cdef const double[::1] d = np.ascontiguousarray(diag, dtype=float)
    cdef const double[::1] up = np.ascontiguousarray(upper, dtype=float)
    cdef const double[::1] b = np.ascontiguousarray(rhs, dtype=float)
    cdef const double[::1] low = np.ascontiguousarray(lb, dtype=float)
    out = np.array(x0, dtype=float, copy=True)
    cdef double[::1] x = out
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t i
    cdef int sweeps = 0
    cdef double resid = 0.0
    cdef double r, xi, defect
    while sweeps < max_iter:
        for i in range(n):
            r = b[i] - d[i] * x[i]
            if i > 0:
                r -= lo[i - 1] * x[i - 1]
            if i < n - 1:
                r -= up[i] * x[i + 1]
            xi = x[i] + omega * r / d[i]
            if xi < low[i]:
                xi = low[i]
            x[i] = xi
        sweeps += 1
        resid = 0.0
        for i in range(n):
            r = b[i] - d[i] * x[i]
            if i > 0:
                r -= lo[i - 1] * x[i - 1]
            if i < n - 1:
                r -= up[i] * x[i + 1]
            if x[i] > low[i]:
                defect = r if r >= 0.0 else -r
            else:
                defect = r if r > 0.0 else 0.0
            if defect > resid:
                resid = defect
        if resid <= tol:
            break
    return out, sweeps, resid
