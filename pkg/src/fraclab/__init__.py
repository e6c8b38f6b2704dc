"""Numerics for the Dirichlet problem (-Delta)^s u = lambda f(u) on bounded domains.

Submodules: ``constants`` (closed-form thresholds), ``discretization``
(dense 1-D operator and seminorm quadrature), ``variational`` (energy,
minimiser, mountain pass), ``config`` and ``cli``.
"""

from .constants import (
    DomainSpec,
    FracParams,
    PowerReaction,
    ThresholdBundle,
    threshold_bundle,
)
from .discretization import DiscreteField, FractionalOperator, Grid1D, assemble_operator, build_grid
from .errors import ArgumentError, ConvergenceError, DomainError
from .variational import CriticalPointReport, ProblemSpec, make_problem, two_solution_experiment

__all__ = [
    "ArgumentError",
    "ConvergenceError",
    "CriticalPointReport",
    "DiscreteField",
    "DomainError",
    "DomainSpec",
    "FracParams",
    "FractionalOperator",
    "Grid1D",
    "PowerReaction",
    "ProblemSpec",
    "ThresholdBundle",
    "assemble_operator",
    "build_grid",
    "make_problem",
    "threshold_bundle",
    "two_solution_experiment",
]
