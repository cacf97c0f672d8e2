"""Exact analysis of finite metric spaces.

Covering and packing numbers, the betweenness exponent, ultrametricity with
witnesses, metrics on products of two spaces, and randomized suites checking
the characterization theorems that connect them.
"""
from .betweenness import (
    INFINITE,
    ball_diameter_check,
    betweenness_exponent,
    snowflake,
    triple_exponent,
)
from .core import (
    DEFAULT_TOL,
    CheckReport,
    DomainError,
    FiniteMetricSpace,
    InfeasibleError,
    MetricError,
    MetricValidationError,
    StructuralInputError,
    SubsetMask,
    ToleranceConfig,
    closed_ball,
    diameter,
    distance_breakpoints,
    epsilon_grid,
    is_ultrametric,
    restrict,
    validate_metric,
)
from .coverpack import (
    DEFAULT_LIMITS,
    SolverLimits,
    chain_classical,
    chain_refined,
    covering_number,
    entropy_profile,
    min_maximal_packing,
    packing_number,
)

__version__ = "0.1.0"
