"""Semiparametric density-ratio estimation, f-divergence estimators, and
two-sample homogeneity tests, with a Monte Carlo lab for calibration and
power studies."""

from .errors import (
    DimensionMismatch,
    InvalidAlpha,
    InvalidDof,
    InvalidLevel,
    MalformedCsv,
    NonpositiveRatio,
    NotConverged,
    RatiotestError,
    RejectionSamplingStall,
    SingularCovariance,
    SingularJacobian,
    UsageError,
)
from .models import (
    FeatureMap,
    RatioModel,
    eval_ratio,
    exponential_model,
    grad_log_ratio,
    linear_features,
    linear_model,
    linear_quadratic_features,
    model_from_config,
    power_model,
)
from .estimation import (
    Dataset,
    EtaFunction,
    FitResult,
    SolverOptions,
    estimating_equation,
    fit,
    optimal_eta,
    plain_gradient_eta,
    solver_options_from_config,
    theta_asymptotic_variance,
)
from .divergences import (
    AlternativeScenario,
    Decomposition,
    DecompositionComparison,
    DivergenceEstimate,
    EstimatorChoice,
    FDivergence,
    decomposition_variance_compare,
    divergence_from_config,
    estimate_divergence,
    gaussian_mean_shift_scenario,
    make_divergence,
    universal_decomposition,
)
from .htest import (
    PowerPrediction,
    TestOutcome,
    df_test,
    empirical_likelihood_test,
    hotelling_t2_test,
    power_from_noncentrality,
    power_prediction,
)
from .statdist import (
    RngStream,
    chi2_cdf,
    chi2_quantile,
    f_quantile,
    noncentral_chi2_sf,
    sample_iid_t,
    sample_mvn_standard,
)
from .simlab import (
    CellResult,
    CellSpec,
    SimConfig,
    SimReport,
    emit_table,
    generate_pair,
    load_sim_config,
    parse_table,
    run,
    sim_config_from_mapping,
)

__version__ = "0.1.0"
