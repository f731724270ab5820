"""MMSE estimation and variance-based lower bounds on exponential-family
observation models.

The library computes the minimum mean squared error of estimating a signal
X from an observation Y whose conditional law is an exponential family,
three independent ways (closed forms, classical conditional-mean Monte
Carlo, and a gradient-of-information-density route), and evaluates a
Poincare-type lower bound built from the Bakry-Emery constant of the
channel and the conditional variance of the information density, alongside
the Cramer-Rao baseline.  A CLI sweeps noise levels and writes CSV + PNG
reports.
"""

from .bounds import (
    BoundEstimate,
    BoundReport,
    HighNoiseRow,
    bakry_emery_constant,
    bakry_emery_on_grid,
    cond_info_variance,
    cramer_rao_gaussian,
    gaussian_prior_fisher,
    high_noise_diagnostic,
    poincare_lb_gaussian,
    poincare_lower_bound,
    prior_fisher_information,
    rho,
    rho_on_grid,
)
from .errors import (
    DegenerateWeights,
    DomainError,
    EmptyGrid,
    MmsekitError,
    NonFiniteSample,
    NotPSD,
    NotSymmetric,
    NumericalUnderflow,
    PriorHasNoDensity,
    RankDeficiencyRateExceeded,
    RankDeficient,
    RankDeficientEverywhere,
    SoundnessViolation,
    ToleranceNotMet,
    UnsupportedStrategy,
    WrongChannel,
)
from .expfamily import (
    GAUSSIAN_EXPERIMENT_COVARIANCE,
    BpskPrior,
    ChannelModel,
    ClosedForm,
    GammaPrior,
    GammaVarianceChannel,
    GaussianChannel,
    GaussianPrior,
    JointModel,
    MonteCarlo,
    PointMassPrior,
    PriorModel,
    SparsePrior,
    prior_moments,
    sample_joint,
)
from .infodensity import (
    MarginalEvaluator,
    cond_mean_importance,
    cond_mean_tweedie,
    grad_y_info_density,
    info_density,
    marginal_log_pdf,
)
from .mmse import (
    DEFAULT_SAMPLES,
    GammaExpectations,
    GradientRouteEstimate,
    gamma_expectation_identities,
    mmse_bpsk,
    mmse_classical_mc,
    mmse_gamma_closed_form,
    mmse_gaussian_closed_form,
    mmse_gradient_mc,
)
from .numcore import (
    CI_MULTIPLIER,
    RANK_TOLERANCE,
    McEstimate,
    derive_seed,
    integrate_1d,
    left_pseudo_inverse,
    mc_mean,
    mc_variance,
    smallest_eigenvalue,
    smallest_singular_value,
)
from .verification import SuiteResult, all_passed, run_verification

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # numcore
    "CI_MULTIPLIER",
    "RANK_TOLERANCE",
    "McEstimate",
    "derive_seed",
    "integrate_1d",
    "left_pseudo_inverse",
    "mc_mean",
    "mc_variance",
    "smallest_eigenvalue",
    "smallest_singular_value",
    # models
    "GAUSSIAN_EXPERIMENT_COVARIANCE",
    "BpskPrior",
    "ChannelModel",
    "ClosedForm",
    "GammaPrior",
    "GammaVarianceChannel",
    "GaussianChannel",
    "GaussianPrior",
    "JointModel",
    "MonteCarlo",
    "PointMassPrior",
    "PriorModel",
    "SparsePrior",
    "prior_moments",
    "sample_joint",
    # information density
    "MarginalEvaluator",
    "cond_mean_importance",
    "cond_mean_tweedie",
    "grad_y_info_density",
    "info_density",
    "marginal_log_pdf",
    # mmse routes
    "DEFAULT_SAMPLES",
    "GammaExpectations",
    "GradientRouteEstimate",
    "gamma_expectation_identities",
    "mmse_bpsk",
    "mmse_classical_mc",
    "mmse_gamma_closed_form",
    "mmse_gaussian_closed_form",
    "mmse_gradient_mc",
    # bounds
    "BoundEstimate",
    "BoundReport",
    "HighNoiseRow",
    "bakry_emery_constant",
    "bakry_emery_on_grid",
    "cond_info_variance",
    "cramer_rao_gaussian",
    "gaussian_prior_fisher",
    "high_noise_diagnostic",
    "poincare_lb_gaussian",
    "poincare_lower_bound",
    "prior_fisher_information",
    "rho",
    "rho_on_grid",
    # verification
    "SuiteResult",
    "all_passed",
    "run_verification",
    # errors
    "MmsekitError",
    "DegenerateWeights",
    "DomainError",
    "EmptyGrid",
    "NonFiniteSample",
    "NotPSD",
    "NotSymmetric",
    "NumericalUnderflow",
    "PriorHasNoDensity",
    "RankDeficiencyRateExceeded",
    "RankDeficient",
    "RankDeficientEverywhere",
    "SoundnessViolation",
    "ToleranceNotMet",
    "UnsupportedStrategy",
    "WrongChannel",
]
