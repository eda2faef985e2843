# Services Package
from .bounds import (
    BoundModel, AffineTerm, AssumptionReport,
    WEIGHTED_LINEAR, SUP_AFFINE, LEGENDRE_SQRT, FACTORIAL_ALPHA, FAMILIES,
    eval_b, limiting_membership, check_assumptions,
)
from .index_sets import (
    IndexSet, LevelHistogram,
    enumerate_superlevel, build_quasi_optimal, cardinality_profile,
    level_histogram, level_cardinalities, count_superlevel, is_downward_closed,
)
from .tails import TailValue, TotalSum, total_sum, exact_tail, remainder_bound
from .polytope import (
    EhrhartQP, LimitingSet,
    volume, ehrhart_fit, exact_volume, limiting_vertices, lattice_point_count,
)
from .estimates import (
    MinCardinality,
    upper_asymptotic, lower_asymptotic, sum_jN_bound, sum_jN_exact,
    stechkin, stechkin_optimized, iso_stechkin, iso_optimized, complex_bound,
    polylog_neg, pre_asymptotic_sum_bound, pre_asymptotic_tail_bound, min_cardinality,
)
from .presets import list_presets, load_preset, resolve_model

__all__ = [
    # Bound models
    "BoundModel", "AffineTerm", "AssumptionReport",
    "WEIGHTED_LINEAR", "SUP_AFFINE", "LEGENDRE_SQRT", "FACTORIAL_ALPHA", "FAMILIES",
    "eval_b", "limiting_membership", "check_assumptions",
    # Index sets
    "IndexSet", "LevelHistogram",
    "enumerate_superlevel", "build_quasi_optimal", "cardinality_profile",
    "level_histogram", "level_cardinalities", "count_superlevel", "is_downward_closed",
    # Tails
    "TailValue", "TotalSum", "total_sum", "exact_tail", "remainder_bound",
    # Polytope
    "EhrhartQP", "LimitingSet",
    "volume", "ehrhart_fit", "exact_volume", "limiting_vertices", "lattice_point_count",
    # Estimates
    "MinCardinality",
    "upper_asymptotic", "lower_asymptotic", "sum_jN_bound", "sum_jN_exact",
    "stechkin", "stechkin_optimized", "iso_stechkin", "iso_optimized", "complex_bound",
    "polylog_neg", "pre_asymptotic_sum_bound", "pre_asymptotic_tail_bound", "min_cardinality",
    # Presets
    "list_presets", "load_preset", "resolve_model",
]
