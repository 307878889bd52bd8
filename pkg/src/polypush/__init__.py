"""polypush: learning polynomial transformations of Gaussian seeds by moments.

Library for recovering quadratic (tensor-ring) and low-rank odd-order
networks from moment tables, with moment-relaxation and local solver
backends, gauge-aware evaluation, smoothed-instance generation, and a
lower-bound lab producing statistically-close / parameter-distant pairs.
"""

__version__ = "0.1.0"

from .errors import (
    ConvergenceError,
    DegeneracyError,
    PolypushError,
    ResourceError,
    UsageError,
)
from .networks import (
    PolyNetwork,
    SeedDistribution,
    SmoothingParams,
    evaluate,
    network_from_json,
    network_to_json,
    rotate_network,
    sample,
    smooth_componentwise,
    smooth_quadratic,
    w1_upper_bound,
)
from .gauge import AlignmentConfig, gauge_distance
from .moments import (
    PairMomentTable,
    QuadraticMomentTable,
    SigmaMatrix,
    cumulant_diagonal,
    estimate_pair_moments,
    estimate_quadratic_moments,
    exact_quadratic_moments,
    hermite_pair_moment,
    sigma_matrix,
    table_from_json,
    table_to_json,
)
from .tensor_ring import (
    RecoveryReport,
    TRConfig,
    decompose,
    extend_tail,
    find_combo,
    gauge_fix,
    jennrich_diagonal,
    verify_assumption_tr,
)
from .lowrank import (
    LRConfig,
    extend_tail_lr,
    f_vector,
    factorize,
    verify_assumption_lr,
)
from .lowerbound import (
    LBInstance,
    MatchedPair,
    build_networks,
    char_gap,
    param_distance_lb,
    search_matched_pair,
)

__all__ = [
    "__version__",
    "PolypushError", "UsageError", "ConvergenceError", "DegeneracyError",
    "ResourceError",
    "PolyNetwork", "SeedDistribution", "SmoothingParams", "evaluate",
    "network_from_json", "network_to_json", "rotate_network", "sample",
    "smooth_componentwise", "smooth_quadratic", "w1_upper_bound",
    "AlignmentConfig", "gauge_distance",
    "PairMomentTable", "QuadraticMomentTable", "SigmaMatrix",
    "cumulant_diagonal", "estimate_pair_moments",
    "estimate_quadratic_moments", "exact_quadratic_moments",
    "hermite_pair_moment", "sigma_matrix", "table_from_json", "table_to_json",
    "RecoveryReport", "TRConfig", "decompose", "extend_tail", "find_combo",
    "gauge_fix", "jennrich_diagonal", "verify_assumption_tr",
    "LRConfig", "extend_tail_lr", "f_vector", "factorize",
    "verify_assumption_lr",
    "LBInstance", "MatchedPair", "build_networks", "char_gap",
    "param_distance_lb", "search_matched_pair",
]
