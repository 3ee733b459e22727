"""Stability-based risk-control calibration for non-monotonic losses."""

from .core import (
    NEG_INF,
    CalibrationError,
    CalibrationResult,
    Dataset,
    LabeledSample,
    LossSpec,
    empirical_risk,
    loo_datasets,
    stability_gap,
)
from .crc import (
    DiscretizedCalibrator,
    GridSpec,
    LeftmostRootCalibrator,
    MonotoneCrcCalibrator,
    SmoothLossCert,
    crc_monotonic,
    discretized_root,
    epsilon_star,
    general_risk_bound,
    reference_root,
    smooth_stability_bound,
)
from .erm import (
    DebiasReport,
    ErmConfig,
    GradStabilityReport,
    GroupCertificate,
    RidgeCalibrator,
    conservative_gamma,
    debias_ols,
    erm_fit_convex,
    grad_stability_beta,
    loss_stability_beta,
    min_eigen_ratio,
    read_debias_csv,
    ridge_fit,
)
from .harness import (
    McReport,
    SyntheticSegTask,
    fdr_loss,
    fdr_loss_spec,
    iou_loss,
    iou_loss_spec,
    monte_carlo_verify,
)
from .experiments import (
    figure1_tables,
    load_config,
    run_experiment,
    write_table,
)
from .lambert import NEG_INV_E, lambert_w_m1, loczi_bracket
from .ltt import LttConfig, hoeffding_pvalue, ltt_select
from .selective import (
    MonteCarloConfig,
    SelectiveCalibrator,
    SelectiveInstance,
    band_crossing_count,
    band_endpoints,
    compare_index_rules,
    fit_threshold,
    k_statistic,
    loo_threshold_indices,
    make_instance,
    read_selective_csv,
    scenario_error_probs,
    scenario_generate,
    selective_loss,
    selective_loss_spec,
    selective_stability_beta,
    sorted_view,
)
from .stability import (
    AlgoFamily,
    BootstrapConfig,
    StabilityEstimate,
    bootstrap_beta,
    crc_conservative,
)

__version__ = "0.1.0"

__all__ = [
    "NEG_INF",
    "NEG_INV_E",
    "AlgoFamily",
    "BootstrapConfig",
    "CalibrationError",
    "CalibrationResult",
    "Dataset",
    "DebiasReport",
    "DiscretizedCalibrator",
    "ErmConfig",
    "GradStabilityReport",
    "GridSpec",
    "GroupCertificate",
    "LabeledSample",
    "LeftmostRootCalibrator",
    "LossSpec",
    "LttConfig",
    "McReport",
    "MonotoneCrcCalibrator",
    "MonteCarloConfig",
    "RidgeCalibrator",
    "SelectiveCalibrator",
    "SelectiveInstance",
    "SmoothLossCert",
    "StabilityEstimate",
    "SyntheticSegTask",
    "band_crossing_count",
    "band_endpoints",
    "bootstrap_beta",
    "compare_index_rules",
    "conservative_gamma",
    "crc_conservative",
    "crc_monotonic",
    "debias_ols",
    "discretized_root",
    "empirical_risk",
    "epsilon_star",
    "erm_fit_convex",
    "fdr_loss",
    "fdr_loss_spec",
    "figure1_tables",
    "fit_threshold",
    "general_risk_bound",
    "grad_stability_beta",
    "hoeffding_pvalue",
    "iou_loss",
    "iou_loss_spec",
    "k_statistic",
    "lambert_w_m1",
    "load_config",
    "loczi_bracket",
    "loo_datasets",
    "loo_threshold_indices",
    "loss_stability_beta",
    "ltt_select",
    "make_instance",
    "min_eigen_ratio",
    "monte_carlo_verify",
    "read_debias_csv",
    "read_selective_csv",
    "reference_root",
    "ridge_fit",
    "run_experiment",
    "scenario_error_probs",
    "scenario_generate",
    "selective_loss",
    "selective_loss_spec",
    "selective_stability_beta",
    "smooth_stability_bound",
    "sorted_view",
    "stability_gap",
    "write_table",
]
