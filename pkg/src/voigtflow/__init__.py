"""voigtflow: pseudo-spectral Euler / Euler-Voigt / Navier-Stokes-Voigt
solver suite on the 3D periodic torus."""

from .dynamics import (
    Forcing,
    ManufacturedSolution,
    ModalPeriodicForcing,
    ModelParams,
    NoForcing,
    SteadyForcing,
    SyntheticForcing,
    convective_term,
    manufactured_forcing,
    manufactured_shear,
    manufactured_taylor_green,
    pressure_from_velocity,
    rhs,
)
from .experiments import (
    ConvergenceReport,
    ConvergenceRow,
    ConvergenceStudySpec,
    DatumSpec,
    couple_alpha_to_beta,
    fit_loglog_slope,
    make_perturbed_datum,
    run_alpha_beta_convergence,
    run_alpha_convergence,
    run_filter_rates,
    run_manufactured_order_check,
    run_nsv_convergence,
)
from .field import (
    SpectralScalarField,
    SpectralVectorField,
    divergence_max,
    fractional_laplacian,
    from_physical,
    helmholtz_invert,
    leray_project,
    random_field,
    sobolev_inner,
    sobolev_norm,
    taylor_green,
    to_physical,
    truncate_filter,
    zero_field,
)
from .grid import TorusGrid
from .integrate import (
    BlowUpError,
    CFLWarning,
    DiagnosticsRecord,
    SimulationState,
    StepperConfig,
    Trajectory,
    blowup_monitor,
    integrate,
    rk4_step,
    step,
    voigt_energy,
)
from .periodic_orbit import (
    OrbitResult,
    PoincareConfig,
    absorbing_radius,
    find_periodic_solution,
    linear_periodic_response,
    poincare_map,
)
from .snapshot import load_snapshot, save_snapshot

__version__ = "0.1.0"
