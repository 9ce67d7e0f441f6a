"""Simulation and verification toolkit for change-of-measure transforms of
reversible Markov processes.

The package covers two model families — finite reversible chains and a
Brownian-plus-stable jump diffusion — and three transform families (state
tilts, symmetric jump tilts, and general supermartingale weights).  It
provides exact generator/energy-form algebra, cadlag path records with time
reversal, pathwise multiplicative weights, Monte Carlo estimators of the
transformed process's semigroup and energy, and a CLI that runs configured
verification checks.
"""

from .errors import (
    ConfigError,
    DomainError,
    GirsanovError,
    IntegrabilityError,
    ModelError,
    PathError,
    TransformError,
)
from .model import (
    FiniteSymmetricModel,
    JumpDiffusionModel,
    LevySystemView,
    SymmetryReport,
    jump_measure,
    killing_measure,
    levy_system,
    stable_kernel_density,
    stable_small_jump_variance,
    stable_tail_intensity,
    validate_symmetry,
)
from .paths import (
    CafSpec,
    Path,
    evenness_residual,
    integrate_along,
    jump_sum,
    lyons_zheng_residual,
    path_to_csv,
    reverse,
    shift,
)
from .transform import (
    GeneralMF,
    IntegrabilityReport,
    MFTrace,
    PureJumpPhi,
    RhoTransform,
    jump_measure_density,
    general_mf,
    integrability_check,
    inverse_transform,
    log_weight_fn,
    pure_jump_mf,
    reversal_identity_residual,
    rho_transform_mf,
    split_mf,
    stable_rate_table,
    transformed_jump_measure,
    transformed_killing,
    transformed_levy_kernel,
    transformed_model,
    transformed_revuz,
)
from .dirichlet import (
    ConservativenessReport,
    DomainReport,
    FormValue,
    QuadratureForm,
    base_form,
    conservativeness_check,
    continuum_form_quadrature,
    domain_membership,
    pure_jump_generator,
    transformed_form_phi,
    transformed_form_rho,
    transformed_generator,
)
from .montecarlo import (
    EstimatorResult,
    RngSpec,
    estimate_jump_intensity_ratio,
    estimate_mass,
    estimate_quadratic_form,
    estimate_symmetry_gap,
    estimate_transformed_semigroup,
    quadratic_form_trend,
    sample_finite_path,
    sample_jump_diffusion_path,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DomainError",
    "GirsanovError",
    "IntegrabilityError",
    "ModelError",
    "PathError",
    "TransformError",
    "FiniteSymmetricModel",
    "JumpDiffusionModel",
    "LevySystemView",
    "SymmetryReport",
    "jump_measure",
    "killing_measure",
    "levy_system",
    "stable_kernel_density",
    "stable_small_jump_variance",
    "stable_tail_intensity",
    "validate_symmetry",
    "CafSpec",
    "Path",
    "evenness_residual",
    "integrate_along",
    "jump_sum",
    "lyons_zheng_residual",
    "path_to_csv",
    "reverse",
    "shift",
    "GeneralMF",
    "IntegrabilityReport",
    "MFTrace",
    "PureJumpPhi",
    "RhoTransform",
    "jump_measure_density",
    "general_mf",
    "integrability_check",
    "inverse_transform",
    "log_weight_fn",
    "pure_jump_mf",
    "reversal_identity_residual",
    "rho_transform_mf",
    "split_mf",
    "stable_rate_table",
    "transformed_jump_measure",
    "transformed_killing",
    "transformed_levy_kernel",
    "transformed_model",
    "transformed_revuz",
    "ConservativenessReport",
    "DomainReport",
    "FormValue",
    "QuadratureForm",
    "base_form",
    "conservativeness_check",
    "continuum_form_quadrature",
    "domain_membership",
    "pure_jump_generator",
    "transformed_form_phi",
    "transformed_form_rho",
    "transformed_generator",
    "EstimatorResult",
    "RngSpec",
    "estimate_jump_intensity_ratio",
    "estimate_mass",
    "estimate_quadratic_form",
    "estimate_symmetry_gap",
    "estimate_transformed_semigroup",
    "quadratic_form_trend",
    "sample_finite_path",
    "sample_jump_diffusion_path",
    "__version__",
]
