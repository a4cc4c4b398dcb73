"""Non-inferiority testing for the population R-squared with random regressors.

Library layout:

- ``distributions``: F distribution CDF/quantile at fractional degrees of
  freedom, built on a continued-fraction incomplete beta; keyed random
  streams for reproducible simulation.
- ``inference``: the one-sided upper confidence bound for the population
  variance share P2 and the non-inferiority p-value, both via fixed-point
  iteration on a scaled central F approximation.
- ``regression``: intercept-included ordinary least squares and R2.
- ``montecarlo``: the rejection-rate simulation harness and the built-in
  30-scenario study grid.
- ``cli``: the ``r2margin`` command-line tool.
"""

from .distributions import (
    FParams,
    RandomStream,
    f_cdf,
    f_quantile,
    ln_gamma,
    reg_inc_beta,
    sample_standard_normal,
)
from .errors import (
    ConvergenceError,
    DegenerateInputError,
    DimensionMismatchError,
    DomainError,
    ExcessiveSkipsError,
    NotPositiveDefiniteError,
    R2MarginError,
    RankDeficiencyError,
)
from .inference import (
    ConfidenceBound,
    FixedPoint,
    NonInfResult,
    TestInput,
    fixed_point_v,
    noninferiority_pvalue,
    upper_ci_p2,
)
from .montecarlo import (
    RejectionRecord,
    Scenario,
    cholesky_factor,
    default_delta_grid,
    exchangeable_covariance,
    generate_dataset,
    paper_grid,
    run_scenario,
    true_p2,
)
from .regression import Dataset, OlsFit, fit_ols, r_squared

__version__ = "0.1.0"

__all__ = [
    "ConfidenceBound",
    "ConvergenceError",
    "Dataset",
    "DegenerateInputError",
    "DimensionMismatchError",
    "DomainError",
    "ExcessiveSkipsError",
    "FParams",
    "FixedPoint",
    "NonInfResult",
    "NotPositiveDefiniteError",
    "OlsFit",
    "R2MarginError",
    "RandomStream",
    "RankDeficiencyError",
    "RejectionRecord",
    "Scenario",
    "TestInput",
    "cholesky_factor",
    "default_delta_grid",
    "exchangeable_covariance",
    "f_cdf",
    "f_quantile",
    "fit_ols",
    "fixed_point_v",
    "generate_dataset",
    "ln_gamma",
    "noninferiority_pvalue",
    "paper_grid",
    "r_squared",
    "reg_inc_beta",
    "run_scenario",
    "sample_standard_normal",
    "true_p2",
    "upper_ci_p2",
]
