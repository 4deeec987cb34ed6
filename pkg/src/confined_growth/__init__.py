"""Growth tightness for confined subgroups of free groups.

Schreier coset graphs, growth and cogrowth estimation, tree-ball gap
certificates, and exact verification of the coset inflation map.
"""
from .errors import (
    CompletionError,
    ConfinedGrowthError,
    HypothesisNotMet,
    InputError,
    ResourceError,
    SelectionFailure,
    StateError,
    UnsupportedBackendError,
    ValidationError,
)
from .estimators import CogrowthEstimator, GrowthRateEstimator, GrowthTightnessAnalyzer
from .growth import (
    GapCertificate,
    GapFunctionParams,
    GrowthEstimate,
    appendix1_bound,
    appendix1_gap,
    appendix2_bound,
    appendix2_gap,
    certify_gap,
    estimate_cogrowth,
    estimate_rate,
    find_gap_omega,
    free_group_rate,
    negligible_ratio,
    poincare_partial,
    rho,
    rho_deficit,
    verify_inequalities,
)
from .insertion import (
    choose_insertions,
    decompose,
    exponential_count_report,
    phi,
    verify_coset,
    verify_injective,
    verify_scheme,
)
from .schreier import (
    BallTable,
    CosetGraph,
    bfs_ball,
    confinement_check,
    cyclic_quotient,
    from_abelianization,
    from_coset_table,
    from_edge_list_file,
    from_free_product,
    hashimoto_growth,
    loop_counts,
    shell,
    tree_ball_radius,
    trivial_subgroup,
)
from .words import Alphabet, ReducedWord, conjugate, enumerate_ball, multiply, parse_word, reduce

__version__ = "0.1.0"
