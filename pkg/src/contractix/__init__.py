"""Gradient descent and Heavy-Ball as fixed-point iterations.

Submodules
----------
objective
    The function class F(L, U), quadratic and ridge objectives.
fixedpoint
    Gradient-step and Heavy-Ball operators, iteration drivers, rate bounds.
worstcase
    The circulant hard instance and the first-order lower bound.
analysis
    Block-spectral analysis of Heavy-Ball and quadrature oracles.
harness
    The ``contractix`` command line.
"""

from .errors import (
    ConsistencyError,
    DatasetError,
    DimensionError,
    DivergenceError,
    SingularMatrixError,
    UnsupportedOperationError,
)
from .fixedpoint import (
    GradientStepOperator,
    HeavyBallParams,
    IterationTrace,
    RateBounds,
    StackedState,
    contraction_factor,
    gd_upper_bound,
    hb_params,
    hb_upper_bound,
    optimal_step,
    rate_bounds,
    run_fixed_point,
    run_heavy_ball,
)
from .objective import (
    QuadraticObjective,
    RidgeRegressionProblem,
    SmoothnessBounds,
    SmoothObjective,
    exact_minimizer,
    random_quadratic,
    ridge_to_quadratic,
)
from .worstcase import WorstCaseInstance, build_worst_case, fom_lower_bound

__version__ = "0.1.0"

__all__ = [
    "ConsistencyError",
    "DatasetError",
    "DimensionError",
    "DivergenceError",
    "SingularMatrixError",
    "UnsupportedOperationError",
    "GradientStepOperator",
    "HeavyBallParams",
    "IterationTrace",
    "RateBounds",
    "StackedState",
    "contraction_factor",
    "gd_upper_bound",
    "hb_params",
    "hb_upper_bound",
    "optimal_step",
    "rate_bounds",
    "run_fixed_point",
    "run_heavy_ball",
    "QuadraticObjective",
    "RidgeRegressionProblem",
    "SmoothnessBounds",
    "SmoothObjective",
    "exact_minimizer",
    "random_quadratic",
    "ridge_to_quadratic",
    "WorstCaseInstance",
    "build_worst_case",
    "fom_lower_bound",
]
