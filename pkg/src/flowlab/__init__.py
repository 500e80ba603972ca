"""Numerical laboratory for curvature-function inequalities and axisymmetric
contracting curvature flows.

Layout:
  symfun    -- elementary symmetric functions, speed functions, derivatives
  lemma_lab -- randomized inequality campaigns with seeded reproducibility
  geom      -- meridian profiles, principal curvatures, self-similar residuals
  flow      -- explicit time stepping (raw and normalized) with diagnostics
  cli       -- command-line entry points (verify / flow / selfsim / sphere-radius)
"""

__version__ = "1.0.0"

from .symfun import (
    CurvatureVector,
    DerivativeBundle,
    SpeedFunction,
    SpeedFunctionError,
    elementary_all,
    eval_bundle,
    eval_on_axisymmetric,
    euler_residual,
    power_sum,
    second_derivative_form,
    sigma,
    sigma_identity_residuals,
)
from .lemma_lab import (
    LEMMA_IDS,
    ConditionMargins,
    InequalityReport,
    NumericError,
    SymmetricMatrixValue,
    build_A,
    build_D,
    condition_margins,
    condmin_kkt_point,
    condmin_value,
    cs_margin,
    det_identity_residual,
    key_inequality_margin,
    key_inequality_margin_qfm,
    lamij_margin,
    psd_margin,
    rigidity_terms,
    run_campaign,
    sk_loghess_margin,
    thm63_factor_margin,
)
from .geom import (
    ConvexityError,
    CurvatureField,
    Ellipsoid,
    MeridianProfile,
    PerturbedSphere,
    Sphere,
    curvature_field,
    diagnostics,
    make_shape,
    read_profile_csv,
    selfsim_residual,
    sphere_identity_residuals,
    stationary_sphere_radius,
    write_profile_csv,
)
from .flow import (
    FlowConfig,
    FlowRecord,
    FlowTrace,
    flow_step,
    roundness,
    run_flow,
    shrinking_sphere_oracle,
)

__all__ = [name for name in dir() if not name.startswith("_")]
