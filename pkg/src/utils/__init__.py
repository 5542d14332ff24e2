# Utilities module

from .dominance import (
    ContractViolationError,
    constraint_dominates,
    crowding_distance_order,
    dominates,
    greedy_scattered_subset_order,
    non_dominated_sort,
)
from .indicators import (
    FrontArchive,
    IndicatorError,
    UnsupportedObjectiveCountError,
    compute_reference_point,
    coverage,
    hypervolume,
    hypervolume_trace,
    log_hv_gap_curve,
    pareto_filter,
)
from .scalarization import (
    ScalarizationError,
    chebyshev,
    golovin,
    max_scalarization,
    parego,
    weighted_sum,
)

__all__ = [
    "ContractViolationError",
    "constraint_dominates",
    "crowding_distance_order",
    "dominates",
    "greedy_scattered_subset_order",
    "non_dominated_sort",
    "FrontArchive",
    "IndicatorError",
    "UnsupportedObjectiveCountError",
    "compute_reference_point",
    "coverage",
    "hypervolume",
    "hypervolume_trace",
    "log_hv_gap_curve",
    "pareto_filter",
    "ScalarizationError",
    "chebyshev",
    "golovin",
    "max_scalarization",
    "parego",
    "weighted_sum",
]
