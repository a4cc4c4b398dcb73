"""Ordinary least squares with an always-included intercept.

The fit goes through a QR factorization of the intercept-augmented design
matrix rather than the normal equations, for numerical stability; rank
problems are detected from the R factor's diagonal.  R2 is computed against
the centered total sum of squares.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, DomainError, RankDeficiencyError

__all__ = ["Dataset", "OlsFit", "fit_ols", "r_squared"]

# Relative diagonal tolerance for declaring the design matrix rank deficient.
_RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Dataset:
    """An (X, y) regression problem; the intercept column is implicit.

    ``y`` is the outcome vector of length N and ``x`` the N-by-K covariate
    matrix (K >= 1, N >= K + 2, all entries finite).
    """

    y: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if y.ndim != 1:
            raise DimensionMismatchError(f"y must be one-dimensional, got shape {y.shape}")
        if x.ndim != 2:
            raise DimensionMismatchError(f"x must be two-dimensional, got shape {x.shape}")
        if x.shape[0] != y.shape[0]:
            raise DimensionMismatchError(
                f"y has {y.shape[0]} rows but x has {x.shape[0]}"
            )
        n, k = x.shape
        if k < 1:
            raise DomainError("at least one covariate column is required")
        if n < k + 2:
            raise DomainError(f"need n >= k + 2 observations, got n={n}, k={k}")
        if not np.isfinite(y).all() or not np.isfinite(x).all():
            raise DomainError("dataset contains non-finite entries")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)

    @property
    def n_obs(self) -> int:
        return self.x.shape[0]

    @property
    def n_covariates(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True, eq=False)
class OlsFit:
    """Summary of a least-squares fit.

    ``constant_outcome`` marks the degenerate case of a zero-variance
    outcome, for which r2 is defined as 0.
    """

    intercept: float
    coefficients: np.ndarray
    r2: float
    residual_variance_hat: float
    constant_outcome: bool = False


def fit_ols(data: Dataset) -> OlsFit:
    """Fit y = b0 + X b by least squares and report the fit's R2.

    The intercept is always included.  Raises RankDeficiencyError when the
    augmented design matrix is numerically collinear (an R-factor diagonal
    entry at or below 1e-10 times the largest), with the offending column
    index attached to the exception.
    """
    n = data.n_obs
    k = data.n_covariates
    design = np.column_stack([np.ones(n), data.x])
    q, r = np.linalg.qr(design, mode="reduced")
    diagonal = np.abs(np.diag(r))
    small = np.flatnonzero(diagonal <= _RANK_TOL * diagonal.max())
    if small.size:
        column = int(small[0])
        label = "intercept" if column == 0 else f"covariate {column}"
        raise RankDeficiencyError(
            f"design matrix is rank deficient at column {column} ({label})",
            column_index=column,
        )
    coefficients = np.linalg.solve(r, q.T @ data.y)
    residuals = data.y - design @ coefficients
    sse = float(residuals @ residuals)
    centered = data.y - data.y.mean()
    sst = float(centered @ centered)
    residual_variance = sse / (n - k - 1)
    # A constant outcome rarely gives an exact zero here: mean subtraction
    # leaves rounding residue of order eps * |y|, so compare against that
    # scale rather than zero.
    y_scale = max(1.0, float(np.abs(data.y).max()))
    if sst <= n * (1e-14 * y_scale) ** 2:
        # Nothing to explain; r2 := 0 and the fit is flagged.
        return OlsFit(
            intercept=float(coefficients[0]),
            coefficients=coefficients[1:].copy(),
            r2=0.0,
            residual_variance_hat=residual_variance,
            constant_outcome=True,
        )
    return OlsFit(
        intercept=float(coefficients[0]),
        coefficients=coefficients[1:].copy(),
        r2=1.0 - sse / sst,
        residual_variance_hat=residual_variance,
    )


def r_squared(data: Dataset) -> float:
    """R2 of the intercept-included least-squares fit of ``data``."""
    return fit_ols(data).r2
