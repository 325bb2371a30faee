"""Pure-Python tridiagonal kernels (reference implementation).

These mirror the compiled kernels in ``_speedups.pyx`` operation for
operation, so both backends produce bit-identical results; the compiled
module is built with FP contraction disabled for the same reason.
"""

from __future__ import annotations

import numpy as np


def thomas_solve(lower, diag, upper, rhs, require_positive_pivots=True):
    """Solve tridiag(lower, diag, upper) x = rhs by the Thomas algorithm.

    ``lower`` and ``upper`` have length n-1.  Raises ValueError on a
    nonpositive pivot when ``require_positive_pivots`` is set (all systems
    solved here are SPD or M-matrix modified, so their pivots are positive).
    """
    lo = np.ascontiguousarray(lower, dtype=float).tolist()
    d = np.ascontiguousarray(diag, dtype=float).tolist()
    up = np.ascontiguousarray(upper, dtype=float).tolist()
    b = np.ascontiguousarray(rhs, dtype=float).tolist()
    n = len(d)
    cp = [0.0] * n
    dp = [0.0] * n
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
    x = [0.0] * n
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return np.array(x, dtype=float)


def projected_sor(lower, diag, upper, rhs, lb, x0, omega, tol, max_iter):
    """Projected SOR for min 1/2 x'Ax - rhs'x subject to x >= lb.

    Sweeps ascending node order; returns (x, sweeps, residual) where the
    residual is the max projected KKT defect |Ax - rhs| on free nodes and
    [rhs - Ax]_+ on active ones.
    """
    lo = np.ascontiguousarray(lower, dtype=float).tolist()
    d = np.ascontiguousarray(diag, dtype=float).tolist()
    up = np.ascontiguousarray(upper, dtype=float).tolist()
    b = np.ascontiguousarray(rhs, dtype=float).tolist()
    low = np.ascontiguousarray(lb, dtype=float).tolist()
    x = np.ascontiguousarray(x0, dtype=float).tolist()
    n = len(d)
    sweeps = 0
    resid = 0.0
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
    return np.array(x, dtype=float), sweeps, resid
