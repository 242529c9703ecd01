"""gmclab: simulation and statistical verification of multiplicative chaos.

Exact sampling of log-correlated Gaussian fields, construction of the
associated chaos measures and their inverse homeomorphisms, and a suite
of seeded Monte Carlo experiments that check the laws these objects are
expected to satisfy.
"""

from .errors import (
    ConfigError,
    DegenerateDesignError,
    DegenerateTailError,
    EmitError,
    GmcLabError,
    InsufficientMassError,
    LengthMismatchError,
    NotPositiveDefiniteError,
    OutOfDomainError,
    ParseError,
    ScaleMismatchError,
    TooFewSamplesError,
    ValidationError,
)
from .fields import (
    CovarianceKernel,
    FieldKind,
    FieldSample,
    FieldSampler,
    FieldSpec,
    Grid,
    Lognormal,
    LognormalVariant,
    covariance_matrix,
    draw_lognormal,
    draw_lognormals,
    eval_kernel,
    grid_for,
    kernel_for,
    sample_coupled_heights,
    sample_field,
    sample_truncation_ladder,
    tile_periodic,
)
from .inverse import (
    DyadicApprox,
    QuantilePath,
    ScaleComparison,
    dyadic_approx,
    density_integrand,
    increment,
    invert,
    normalized_inverse,
    restricted_inverse_density,
    scale_comparison,
    semigroup_shift,
)
from .measure import (
    GmcMeasure,
    TiltedMeasure,
    ZetaExponent,
    build_measure,
    build_measures_batch,
    build_tilted,
    estimate_moment,
    mass,
    zeta,
    zeta_sup,
)
from .stats import (
    EstimateReport,
    SlopeFit,
    TestReport,
    independence_test,
    ks_two_sample,
    mc_estimate,
    report_from_samples,
    slope_fit,
)

__version__ = "0.1.0"
