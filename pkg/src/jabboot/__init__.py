"""Block bootstrap for studentized statistics with jackknife-after-bootstrap
variance estimation, plus a deterministic Monte Carlo experiment harness."""

from .blocks import (
    BlockScheme,
    TimeSeries,
    assemble_bootstrap_sample,
    block_means,
    block_sums,
    draw_block_indices,
    make_block_scheme,
    read_series_csv,
    write_series_csv,
)
from .boot import (
    BootstrapCenter,
    BootstrapEnsemble,
    BootstrapReplicate,
    Target,
    bootstrap_center,
    ecdf_at,
    ecdf_value,
    quantile,
    quantile_value,
    replicate_statistic,
    run_bootstrap,
)
from .harness import (
    ExperimentConfig,
    MetricsRow,
    enumerate_exact,
    estimate_target_variance,
    jab_rule_m,
    read_results,
    run_experiment,
    write_results,
)
from .jab import (
    DeletionPlan,
    JabEstimate,
    block_jackknife_variance,
    deletion_plan,
    jab_estimate,
    jab_point_value_fresh,
    jab_point_value_reuse,
    jab_variance,
    pseudo_values,
)
from .rng import Stream
from .smoothfn import (
    LagWindowEstimate,
    SmoothModel,
    augment_squares,
    autocovariance,
    builtin_model,
    check_gradient,
    lag_window_tau2,
    numerical_gradient,
    series_for_model,
    studentized_statistic,
    user_model,
)
from .tsgen import ModelSpec, generate, model_iv_theta, true_theta

__version__ = "0.1.0"

__all__ = [
    "BlockScheme",
    "BootstrapCenter",
    "BootstrapEnsemble",
    "BootstrapReplicate",
    "DeletionPlan",
    "ExperimentConfig",
    "JabEstimate",
    "LagWindowEstimate",
    "MetricsRow",
    "ModelSpec",
    "SmoothModel",
    "Stream",
    "Target",
    "TimeSeries",
    "assemble_bootstrap_sample",
    "augment_squares",
    "autocovariance",
    "block_jackknife_variance",
    "block_means",
    "block_sums",
    "bootstrap_center",
    "builtin_model",
    "check_gradient",
    "deletion_plan",
    "draw_block_indices",
    "ecdf_at",
    "ecdf_value",
    "enumerate_exact",
    "estimate_target_variance",
    "generate",
    "jab_estimate",
    "jab_point_value_fresh",
    "jab_point_value_reuse",
    "jab_rule_m",
    "jab_variance",
    "lag_window_tau2",
    "make_block_scheme",
    "model_iv_theta",
    "numerical_gradient",
    "pseudo_values",
    "quantile",
    "quantile_value",
    "read_results",
    "read_series_csv",
    "replicate_statistic",
    "run_bootstrap",
    "run_experiment",
    "series_for_model",
    "studentized_statistic",
    "true_theta",
    "user_model",
    "write_results",
    "write_series_csv",
]
