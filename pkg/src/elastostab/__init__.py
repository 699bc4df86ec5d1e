"""Finite-difference elastodynamics with Cordes-based elliptic solving and
explicit stability-constant verification for conic hyperelastic materials."""

from .grid import (
    Grid,
    MirandaTalentiReport,
    NormKind,
    TimeSeries,
    check_miranda_talenti,
    divergence,
    estimate_khat,
    jacobian,
    laplacian,
    make_grid,
    norm,
    scalar_field,
    second_differences,
    vector_field,
)
from .energy import (
    AuditReport,
    BoundsReport,
    BoundsTable,
    ConicMaterial,
    EnergyModel,
    conic_combine,
    finite_diff_audit,
    quadratic_model,
    saturating_model,
    verify_bounds,
)
from .cordes import (
    CoefficientField,
    CordesReport,
    DimensionReport,
    assemble_coefficients,
    check_cordes,
    check_dimension_condition,
    cordes_constants,
)
from .elliptic import (
    FixedPointResult,
    H2Report,
    apply_L,
    fixed_point_solve,
    poisson_solve,
    verify_h2_estimate,
)
from .dynamics import (
    AprioriBounds,
    EnergyReport,
    Forcing,
    ProblemInstance,
    Trajectory,
    compute_u2,
    energy_balance,
    flux_divergence,
    manufactured_forcing,
    measure_apriori,
    simulate,
    zero_forcing,
)
from .stability import (
    GronwallProblem,
    PairReport,
    StabilityConstants,
    cbar,
    gronwall_bound,
    stability_constants,
    u2_difference_bound,
    verify_h2_bound,
    verify_main_estimate,
    verify_v_bound,
    verify_z_bound,
)
from .cli import ExperimentConfig, RunManifest, load_config, main, run_experiment

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "NormKind",
    "TimeSeries",
    "MirandaTalentiReport",
    "make_grid",
    "scalar_field",
    "vector_field",
    "jacobian",
    "divergence",
    "laplacian",
    "second_differences",
    "norm",
    "estimate_khat",
    "check_miranda_talenti",
    "BoundsTable",
    "EnergyModel",
    "ConicMaterial",
    "BoundsReport",
    "AuditReport",
    "quadratic_model",
    "saturating_model",
    "conic_combine",
    "verify_bounds",
    "finite_diff_audit",
    "CoefficientField",
    "CordesReport",
    "DimensionReport",
    "assemble_coefficients",
    "check_cordes",
    "check_dimension_condition",
    "cordes_constants",
    "FixedPointResult",
    "H2Report",
    "apply_L",
    "fixed_point_solve",
    "poisson_solve",
    "verify_h2_estimate",
    "AprioriBounds",
    "EnergyReport",
    "Forcing",
    "ProblemInstance",
    "Trajectory",
    "compute_u2",
    "energy_balance",
    "flux_divergence",
    "manufactured_forcing",
    "measure_apriori",
    "simulate",
    "zero_forcing",
    "GronwallProblem",
    "PairReport",
    "StabilityConstants",
    "cbar",
    "gronwall_bound",
    "stability_constants",
    "u2_difference_bound",
    "verify_h2_bound",
    "verify_main_estimate",
    "verify_v_bound",
    "verify_z_bound",
    "ExperimentConfig",
    "RunManifest",
    "load_config",
    "main",
    "run_experiment",
    "__version__",
]
