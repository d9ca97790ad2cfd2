"""Kernel quadrature by Nystrom subsampling with optimal weights."""

from .errors import InputError, NumericalError
from .kernels import (
    KernelSpec,
    evaluate,
    gaussian,
    gram,
    laplacian,
    median_heuristic,
    parse_kernel,
    periodic_sobolev,
    sup_norm_bound,
)
from .numerics import SymmetricEigen, eig_sym, pinv_apply
from .sampling import (
    LeverageScores,
    SamplerConfig,
    approx_rls_pilot,
    exact_rls,
    sample_nodes,
    sample_proportional,
    uniform_subsample,
)
from .quadrature import (
    QuadratureRule,
    TargetMeasure,
    compress,
    integrate,
    load_rule,
    mmd,
    optimal_weights,
    save_rule,
    target_moments,
    target_self_product,
    worst_case_error,
    worst_case_witness,
)
from .greedy import GreedyState, greedy_quadrature, greedy_select, power_function_bruteforce
from .spectral import (
    DecayModel,
    RatePrediction,
    check_decay_bounds,
    d_infinity_empirical,
    effective_dimension,
    empirical_covariance_spectrum,
    fit_decay_model,
    lambda_rule,
    rate_slope,
    subsample_size_rule,
    theoretical_rate_curve,
)
from .bench import (
    Dataset,
    ExperimentConfig,
    ExperimentResult,
    gen_synthetic,
    load_csv,
    run_experiment,
    summarize,
)

__version__ = "0.1.0"

__all__ = [
    "InputError",
    "NumericalError",
    "KernelSpec",
    "evaluate",
    "gaussian",
    "gram",
    "laplacian",
    "median_heuristic",
    "parse_kernel",
    "periodic_sobolev",
    "sup_norm_bound",
    "SymmetricEigen",
    "eig_sym",
    "pinv_apply",
    "LeverageScores",
    "SamplerConfig",
    "approx_rls_pilot",
    "exact_rls",
    "sample_nodes",
    "sample_proportional",
    "uniform_subsample",
    "QuadratureRule",
    "TargetMeasure",
    "compress",
    "integrate",
    "load_rule",
    "mmd",
    "optimal_weights",
    "save_rule",
    "target_moments",
    "target_self_product",
    "worst_case_error",
    "worst_case_witness",
    "GreedyState",
    "greedy_quadrature",
    "greedy_select",
    "power_function_bruteforce",
    "DecayModel",
    "RatePrediction",
    "check_decay_bounds",
    "d_infinity_empirical",
    "effective_dimension",
    "empirical_covariance_spectrum",
    "fit_decay_model",
    "lambda_rule",
    "rate_slope",
    "subsample_size_rule",
    "theoretical_rate_curve",
    "Dataset",
    "ExperimentConfig",
    "ExperimentResult",
    "gen_synthetic",
    "load_csv",
    "run_experiment",
    "summarize",
]
