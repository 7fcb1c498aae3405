"""Spectral solver and filter regularisation for the final-value problem
u_t + u_s - u_xx = f on (0, pi) x (0, T)^2 with Dirichlet ends."""

from .problem import (
    PerturbationSpec,
    ProblemSpec,
    Region,
    benchmark_problem,
    classify_domain,
    compatibility_check,
    noise_level,
    perturb,
)
from .regularizer import RegularizationParams, filter_factor, regularized_solve
from .solver import backward_solve_naive, forward_solve, illposedness_norm
from .spectral import SineSpectrum, SpaceGrid, evaluate_series, l2_norm, sine_coefficients

__version__ = "0.1.0"

__all__ = [
    "PerturbationSpec",
    "ProblemSpec",
    "Region",
    "RegularizationParams",
    "SineSpectrum",
    "SpaceGrid",
    "backward_solve_naive",
    "classify_domain",
    "compatibility_check",
    "evaluate_series",
    "filter_factor",
    "forward_solve",
    "illposedness_norm",
    "l2_norm",
    "noise_level",
    "benchmark_problem",
    "perturb",
    "regularized_solve",
    "sine_coefficients",
]
