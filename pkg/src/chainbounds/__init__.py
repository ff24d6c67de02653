"""Recovery limits for layered Gaussian sign networks.

Enumeration of the finite hypothesis class, exact Gaussian laws of the
generative chain, KL and mutual-information bounds, Fano-type failure
bounds, exact and excess prediction risk, and a MAP-decoder experiment
harness with a CLI and HTTP service on top.
"""

from .errors import BudgetExceededError, InvalidConfigError
from .experiment_cli import (
    ExperimentConfig,
    ExperimentRow,
    MapDecoder,
    emit_report,
    map_decoder,
    render_report,
    run_excess_risk_experiment,
    run_recovery_experiment,
)
from .fano_bounds import (
    BoundReport,
    bound_report,
    distance_fano_bound,
    fano_failure_lower_bound,
    neighborhood_sizes,
    rho_distance,
    threshold_exact_recovery,
    threshold_excess_risk,
)
from .gaussian_chain import (
    ChainParams,
    Dataset,
    GaussianDist,
    conditional_dist,
    conditional_mean,
    marginal_covariance,
    marginal_log_density,
    precision_matrix,
    read_dataset_csv,
    sample_dataset,
    structured_marginal_covariance,
    write_dataset_csv,
)
from .hypothesis_space import (
    ENUMERATION_BUDGET,
    GeneralNetwork,
    Hypothesis,
    SignVector,
    StructuredLayer,
    class_cardinality,
    class_log_cardinality,
    composed_permutation,
    effective_pattern,
    effective_vector,
    enumerate_class,
    hypothesis_at,
    index_of,
    magnitude_ladder,
    permutation_at,
    permutation_rank,
    scale_constant,
)
from .info_metrics import (
    KlReport,
    SingularProfile,
    kl_gaussian,
    kl_pair_exact,
    kl_pair_in_class,
    kl_to_prior_bound,
    kl_to_prior_exact,
    m_recursion,
    mc_kl_estimate,
    mi_upper_bound_pairwise,
)
from .risk_analysis import (
    LinearApprox,
    RiskGapConstants,
    at_or_above_gap,
    exact_risk,
    excess_risk,
    excess_risk_lower_bound,
    identifiability_set,
    linear_approx_bound,
    mc_risk_estimate,
    pair_case,
    risk_gap_constants,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetExceededError",
    "InvalidConfigError",
    "ExperimentConfig",
    "ExperimentRow",
    "MapDecoder",
    "emit_report",
    "map_decoder",
    "render_report",
    "run_excess_risk_experiment",
    "run_recovery_experiment",
    "BoundReport",
    "bound_report",
    "distance_fano_bound",
    "fano_failure_lower_bound",
    "neighborhood_sizes",
    "rho_distance",
    "threshold_exact_recovery",
    "threshold_excess_risk",
    "ChainParams",
    "Dataset",
    "GaussianDist",
    "conditional_dist",
    "conditional_mean",
    "marginal_covariance",
    "marginal_log_density",
    "precision_matrix",
    "read_dataset_csv",
    "sample_dataset",
    "structured_marginal_covariance",
    "write_dataset_csv",
    "ENUMERATION_BUDGET",
    "GeneralNetwork",
    "Hypothesis",
    "SignVector",
    "StructuredLayer",
    "class_cardinality",
    "class_log_cardinality",
    "composed_permutation",
    "effective_pattern",
    "effective_vector",
    "enumerate_class",
    "hypothesis_at",
    "index_of",
    "magnitude_ladder",
    "permutation_at",
    "permutation_rank",
    "scale_constant",
    "KlReport",
    "SingularProfile",
    "kl_gaussian",
    "kl_pair_exact",
    "kl_pair_in_class",
    "kl_to_prior_bound",
    "kl_to_prior_exact",
    "m_recursion",
    "mc_kl_estimate",
    "mi_upper_bound_pairwise",
    "LinearApprox",
    "RiskGapConstants",
    "at_or_above_gap",
    "exact_risk",
    "excess_risk",
    "excess_risk_lower_bound",
    "identifiability_set",
    "linear_approx_bound",
    "mc_risk_estimate",
    "pair_case",
    "risk_gap_constants",
    "__version__",
]
