"""Plug-in mixing-density deconvolution.

Estimate a latent mixing density p from an estimate of the observed
mixture f_p = h * p by spectral division with a flat-top kernel, with
threshold regularization near zeros of the noise transform and a Monte
Carlo harness for convergence-rate studies.
"""

from .errors import (
    DegenerateRegionError,
    DomainError,
    MustRegularizeError,
    NonConvergenceError,
    StructuralError,
    UnsupportedVariantError,
)
from .grids import (
    EPS_MASS,
    FREQUENCY,
    SPATIAL,
    GridBox,
    GridFunction,
    apply_transfer,
    convolve,
    fourier,
    grid_from_callable,
    hellinger,
    inverse_fourier,
    lp_distance,
    lp_norm,
    restrict,
    write_grid_csv,
)
from .kernels import (
    FlatTopKernel,
    MomentReport,
    MultiIndex,
    ScaledKernel,
    build_kernel,
    kernel_derivative,
    scale,
    verify_moments,
)
from .noise import (
    OSCILLATORY,
    SMOOTH,
    SUPER_SMOOTH,
    CauchyNoise,
    ExponentialNoise,
    GaussianNoise,
    LaplaceNoise,
    UniformConvNoise,
    envelope_inf,
    h_density,
    htilde,
    parse_model,
    sample_noise,
    zeros_in_band,
)
from .targets import (
    MixingDensity,
    SmoothnessClass,
    forward_density,
    make_target,
    parse_target,
    sample_mixture,
    smooth_bump,
    spline_holder,
    two_bump,
)
from .estimators import (
    EstimateQuality,
    SieveMixing,
    empirical_characteristic,
    fit_minimum_distance,
    measure_quality,
    oracle_inject,
)
from .deconv import (
    C_CONV,
    BandwidthPlan,
    BoundReport,
    PsiL1Report,
    RateDescriptor,
    Region,
    RegularizedTransfer,
    bound_report,
    build_transfer,
    convolution_identity_error,
    derivative_estimate,
    plan_for_bandwidth,
    predicted_exponent,
    psi,
    psi_l1_report,
    psi_star,
    psi_star_l2,
    reg_S,
    select_bandwidth,
    smoothed_estimate,
    tail_T,
)
from .ratelab import (
    BoundCheck,
    StudyConfig,
    StudyResult,
    StudyRow,
    StudySummary,
    fit_rate,
    run_study,
    upper_bound_check,
    write_results_csv,
    write_study,
    write_summary_csv,
)

__version__ = "0.1.0"
