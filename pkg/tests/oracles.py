"""Independent reference computations used to freeze and check expected values.

Each oracle deliberately avoids the code path it validates: the F CDF oracle
integrates the density numerically instead of going through the incomplete
beta; the least-squares oracle solves the normal equations with a hand-rolled
Gauss-Jordan inversion instead of a QR factorization; the confidence-bound
oracle root-solves the defining tail equation directly with an external CDF
instead of running the fixed-point iteration.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, stats


def f_density(x: float, d1: float, d2: float) -> float:
    """Central F density, written out explicitly."""
    if x <= 0.0:
        return 0.0
    a, b = 0.5 * d1, 0.5 * d2
    ln_norm = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
    return math.exp(
        ln_norm
        + a * math.log(d1 / d2)
        + (a - 1.0) * math.log(x)
        - (a + b) * math.log1p(d1 * x / d2)
    )


def f_cdf_quadrature(x: float, d1: float, d2: float) -> float:
    """Adaptive quadrature of the F density over (0, x].

    The mode is passed as a breakpoint when it falls inside the interval so
    the integrator resolves sharply peaked densities at large degrees of
    freedom.
    """
    if x <= 0.0:
        return 0.0
    breakpoints = []
    if d1 > 2.0:
        mode = (d1 - 2.0) / d1 * d2 / (d2 + 2.0)
        if 0.0 < mode < x:
            breakpoints.append(mode)
    value, _ = integrate.quad(
        f_density,
        0.0,
        x,
        args=(d1, d2),
        epsabs=1e-11,
        epsrel=1e-11,
        limit=500,
        points=breakpoints or None,
    )
    return value


def gauss_jordan_inverse(matrix) -> list[list[float]]:
    """Textbook Gauss-Jordan inversion with partial pivoting."""
    size = len(matrix)
    work = [
        [float(v) for v in row] + [1.0 if i == j else 0.0 for j in range(size)]
        for i, row in enumerate(matrix)
    ]
    for col in range(size):
        pivot_row = max(range(col, size), key=lambda r: abs(work[r][col]))
        if abs(work[pivot_row][col]) < 1e-12:
            raise ZeroDivisionError("matrix is singular")
        work[col], work[pivot_row] = work[pivot_row], work[col]
        pivot = work[col][col]
        work[col] = [v / pivot for v in work[col]]
        for row in range(size):
            if row != col and work[row][col] != 0.0:
                factor = work[row][col]
                work[row] = [v - factor * w for v, w in zip(work[row], work[col])]
    return [row[size:] for row in work]


def ols_normal_equations(y, x) -> tuple[np.ndarray, float]:
    """Least squares by explicit inversion of the normal equations.

    Returns (coefficients including the leading intercept, r2).
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    design = np.column_stack([np.ones(len(y)), x])
    gram = design.T @ design
    inverse = np.array(gauss_jordan_inverse(gram.tolist()))
    coefficients = inverse @ (design.T @ y)
    fitted = design @ coefficients
    sse = float(((y - fitted) ** 2).sum())
    sst = float(((y - y.mean()) ** 2).sum())
    return coefficients, 1.0 - sse / sst


def ci_upper_bisection(r2: float, n: int, k: int, alpha: float) -> float:
    """Upper confidence bound as the root of its defining tail equation.

    Finds the margin whose F statistic sits exactly at the alpha/2 lower
    tail of the approximating F distribution, by bisection over
    (r2, 1) using an external F CDF.
    """
    resid = n - k - 1

    def tail_gap(margin: float) -> float:
        f_stat = (resid * r2 * (margin - 1.0)) / ((r2 - 1.0) * (margin * resid + k))
        v = (resid * margin + k) ** 2 / (n - 1 - resid * (1.0 - margin) ** 2)
        return float(stats.f.cdf(f_stat, v, resid)) - 0.5 * alpha

    lo, hi = r2 + 1e-12, 1.0 - 1e-12
    if tail_gap(lo) <= 0.0:
        raise ValueError("bound is at or below the observed r2; bisection inapplicable")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if tail_gap(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
