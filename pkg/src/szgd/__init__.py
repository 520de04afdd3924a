"""Zeroth-order optimization with Stiefel-sampled gradient estimates."""

__version__ = "0.1.0"

from ._backend import BACKEND  # noqa: E402
from .errors import (  # noqa: E402
    DomainError,
    InnerSolverError,
    NonFiniteError,
    SZGDError,
    UnsupportedObjectiveError,
)
from .estimator import (  # noqa: E402
    EstimatorConfig,
    GradientEstimate,
    bias_bound_fourth,
    bias_bound_smooth,
    delta_schedule,
    empirical_bias_variance,
    estimate_gradient,
    variance_bound_fine,
    variance_bound_smooth,
)
from .objectives import (  # noqa: E402
    Objective,
    PowerQuadratic,
    QuadraticForm,
    benchmark_function,
    make_random_psd,
)
from .optimizers import OptimConfig, Trajectory, prox_step, run_gd, run_proximal, run_szgd  # noqa: E402
from .proximal import ProxConfig  # noqa: E402
from .rates import RateFit, distance_series, fit_geometric, fit_power_law, tail_square_sums  # noqa: E402
from .rng import RngStream  # noqa: E402
from .stiefel import StiefelFrame, sample_stiefel, second_moment_check  # noqa: E402

__all__ = [
    "BACKEND", "DomainError", "EstimatorConfig", "GradientEstimate", "InnerSolverError",
    "NonFiniteError", "Objective", "OptimConfig", "PowerQuadratic", "ProxConfig",
    "QuadraticForm", "RateFit", "RngStream", "SZGDError", "StiefelFrame", "Trajectory",
    "UnsupportedObjectiveError", "benchmark_function", "bias_bound_fourth", "bias_bound_smooth",
    "delta_schedule", "distance_series", "empirical_bias_variance", "estimate_gradient",
    "fit_geometric", "fit_power_law", "make_random_psd", "prox_step", "run_gd", "run_proximal",
    "run_szgd", "sample_stiefel", "second_moment_check", "tail_square_sums",
    "variance_bound_fine", "variance_bound_smooth",
]
