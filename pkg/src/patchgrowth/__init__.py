"""Growth rates of time-periodic linear cooperative patch models.

A population spread over ``n`` patches evolves by
``x' = (R(t/T) + m L(t/T)) x`` with diagonal growth ``R``, migration
``L`` (Metzler, zero column sums) of strength ``m`` and period ``T``.
The package computes the growth rate ``Lambda(m, T)``, its asymptotic
limits, sampled checks of the hypotheses behind those limits and
searches for dispersal-induced growth and decay.
"""

from . import modelfile
from .catalog import CatalogEntry, OracleRow, catalog, get_entry, oracle_check
from .digdid import (
    DIDConstruction,
    MinimizerPartition,
    PatchClassification,
    PhenomenonResult,
    classify,
    default_grid,
    did_construct,
    did_scan,
    dig_scan,
    minimizer_partition,
)
from .errors import (
    CrossingLimitError,
    DomainError,
    HypothesisError,
    IntegratorError,
    ModelError,
    ModelFileError,
    NumericalError,
    PatchGrowthError,
    PeriodicityError,
    SpectralError,
)
from .limits import (
    GatedLimit,
    LimitReport,
    M0Profile,
    average_spectral_abscissa,
    corner_limits,
    lambda_m0_profile,
    lambda_m_to_0,
    lambda_m_to_inf,
    lambda_T_to_0,
    lambda_T_to_inf,
    limit_report,
    mean_kernel_growth,
    sigma_chi,
)
from .matrixcore import (
    PerronResult,
    SpectralResult,
    is_irreducible,
    is_metzler,
    matrix_exponential,
    nonnegative_eigenvectors,
    perron_root,
    spectral_abscissa,
)
from .monodromy import (
    LyapunovEstimate,
    MonodromyResult,
    PeriodicOrbit,
    check_H2,
    fundamental_matrix,
    growth_rate,
    iterate_periods,
    periodic_simplex_orbit,
    propagator,
    rk4_fundamental_matrix,
    trajectory_lyapunov,
)
from .pathmodel import (
    CombinedPath,
    Constant,
    ModelParameters,
    PatchModel,
    PiecewiseMatrixPath,
    Smooth,
    average,
    bind,
    merge_breakpoints,
)
from .simplexflow import (
    CheckConfig,
    FlowResult,
    HypothesisReport,
    Witness,
    check_H3,
    check_H4,
    check_matrix,
    frozen_flow,
    simplex_field,
    tangent_jacobian,
)

__version__ = "0.1.0"
