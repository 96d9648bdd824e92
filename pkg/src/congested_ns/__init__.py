"""Numerical laboratory for the 1D free-congested Navier-Stokes equations."""

__version__ = "0.1.0"

from .errors import (
    CongestedNSError,
    ConfigError,
    ConstraintViolationError,
    ContractionError,
    DegenerateDataError,
    DomainError,
    InvalidEndStatesError,
    MonotonicityError,
    NearSingularDenominatorError,
    NewtonError,
    NotConnectableError,
    PerturbationError,
    ProfileEscapedError,
    SpanTooSmallError,
    ZeroMassError,
)
from .grid import Grid1D, GridFunction, cumulative, diff1, diff2, integrate, norms
from .pressure import PressureLaw, p_derivatives, p_eval, weight_ratio
from .profiles import (
    ConvergenceSummary,
    EndStates,
    EpsProfile,
    LimitProfile,
    OdeControls,
    TransitionCorrector,
    ZoneParams,
    ZoneReport,
    convergence_sweep,
    eps_profile_solve,
    eps_speed,
    eps_speed_printed,
    limit_profile_eval,
    limit_speed,
    three_zone_diagnostics,
    transition_corrector_solve,
)
from .eps_solver import (
    EpsState,
    LinearState,
    PerturbationSpec,
    SolverConfig,
    Trajectory,
    build_initial,
    simulate,
    state_velocity,
    step,
    step_linearized,
    sup_deviation_observer,
)
from .energy import (
    EnergyConstants,
    EnergyReport,
    EnergyTracker,
    IntegratedState,
    SmallnessResult,
    integrated_vars,
    integrated_vars_pair,
    l1_diagnostics,
    linearization_residual,
    linearized_operator,
    quadratic_remainders,
    smallness_check,
)
from .free_boundary import (
    FBConfig,
    FBSolution,
    FBState,
    HalfLineData,
    HypothesisReport,
    IdentityReport,
    InterfacePath,
    W0Interpolant,
    h3_bracket_traveling_wave,
    identity_checks,
    identity_rows,
    interface_update,
    perturbed_traveling_wave_data,
    picard_solve,
    traveling_wave_data,
    u_step,
    unshift,
    v_step,
    validate_hypotheses,
    w0_build,
)
