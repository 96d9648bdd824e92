"""Energy diagnostics for the soft-congestion system: integrated variables,
weighted energy/dissipation functionals, the weighted running norm, the
initial-smallness gate, linearization residuals, and L1 tracking."""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ZeroMassError
from .grid import GridFunction, _d1_array, cumulative
from .eps_solver import EpsState, state_velocity
from .profiles import EpsProfile


@dataclass(frozen=True)
class EnergyConstants:
    delta0: float = 0.1     # smallness constant of the initial gate
    c: float = 0.1          # geometric weight of the running norm
    mass_tol: float = 1e-8  # zero-mass tolerance per unit of field scale x domain length

    def __post_init__(self):
        if not 0 < self.c <= 1:
            raise ValueError("c must lie in (0, 1]")
        if not self.delta0 > 0:
            raise ValueError("delta0 must be positive")


@dataclass(frozen=True)
class IntegratedState:
    """Antiderivatives (V, W) of the deviations from the background."""

    t: float
    V: GridFunction
    W: GridFunction


@dataclass(frozen=True)
class EnergyReport:
    E: tuple        # (E0, E1, E2)
    D: tuple        # (D0, D1, D2)
    x_norm_sq: float


def _check_mass(dev: np.ndarray, field_vals: np.ndarray, h: float, name: str, tol: float):
    """Structural zero-mass check: the bar scales with the field magnitude and
    the domain length, so solver stopping noise stays below it while any
    bump-like perturbation mass is far above it."""
    total = float(np.trapezoid(dev, dx=h))
    scale = max(1.0, float(np.max(np.abs(field_vals)))) * h * (len(dev) - 1)
    if abs(total) > tol * scale:
        raise ZeroMassError(
            f"deviation of {name} carries mass {total:.3e} "
            f"(tolerance {tol * scale:.3e})",
            field=name,
            residual_mass=total,
        )


def integrated_vars(
    state: EpsState,
    profile: EpsProfile,
    constants: EnergyConstants = EnergyConstants(),
) -> IntegratedState:
    """V, W as running integrals of (v, w) minus the shifted profile.

    Raises ZeroMassError when a deviation carries non-negligible total mass
    (the integrated formulation is meaningless then)."""
    grid = state.v.grid
    shift = grid.x - profile.speed_eps * state.t
    dv = state.v.values - profile.v(shift)
    dw = state.w.values - profile.w(shift)
    _check_mass(dv, state.v.values, grid.h, "v", constants.mass_tol)
    _check_mass(dw, state.w.values, grid.h, "w", constants.mass_tol)
    return IntegratedState(
        t=state.t,
        V=cumulative(GridFunction(grid, dv)),
        W=cumulative(GridFunction(grid, dw)),
    )


def integrated_vars_pair(
    state: EpsState,
    reference: EpsState,
    constants: EnergyConstants = EnergyConstants(),
) -> IntegratedState:
    """Integrated variables of the difference of two states on the same grid.

    The discrete background (a reference run) replaces the analytic shifted
    profile so that the scheme's own error cancels from the deviation."""
    grid = state.v.grid
    if reference.v.grid != grid:
        raise ValueError("states live on different grids")
    dv = state.v.values - reference.v.values
    dw = state.w.values - reference.w.values
    _check_mass(dv, state.v.values, grid.h, "v", constants.mass_tol)
    _check_mass(dw, state.w.values, grid.h, "w", constants.mass_tol)
    return IntegratedState(
        t=state.t,
        V=cumulative(GridFunction(grid, dv)),
        W=cumulative(GridFunction(grid, dw)),
    )


def _weighted_functionals(ist: IntegratedState, profile: EpsProfile):
    grid = ist.V.grid
    h = grid.h
    shift = grid.x - profile.speed_eps * ist.t
    vb = profile.v(shift)
    weight = -1.0 / profile.law.dp(vb)
    dvb = profile.rhs(vb)
    E = np.zeros(3)
    D = np.zeros(3)
    Vk, Wk = ist.V.values, ist.W.values
    for k in range(3):
        E[k] = np.trapezoid(Wk**2 * weight + Vk**2, dx=h)
        Vk1 = _d1_array(Vk, h)
        D[k] = np.trapezoid(dvb * Wk**2, dx=h) + np.trapezoid(Vk1**2, dx=h)
        Vk, Wk = Vk1, _d1_array(Wk, h)
    return E, D


def energy_report(
    ist: IntegratedState,
    profile: EpsProfile,
    constants: EnergyConstants = EnergyConstants(),
    dissipation_integrals=(0.0, 0.0, 0.0),
) -> EnergyReport:
    """E_k and D_k at one time plus the weighted-norm contribution
    sum_k c^k eps^(2k/gamma) (E_k + accumulated D_k)."""
    E, D = _weighted_functionals(ist, profile)
    eps, gamma = profile.law.epsilon, profile.law.gamma
    val = sum(
        constants.c**k * eps ** (2.0 * k / gamma) * (E[k] + dissipation_integrals[k])
        for k in range(3)
    )
    return EnergyReport(E=tuple(E), D=tuple(D), x_norm_sq=float(val))


class EnergyTracker:
    """Accumulates time integrals of D_k (trapezoid) and the running sup that
    defines the weighted norm; the recorded series is nondecreasing by
    construction."""

    def __init__(self, profile: EpsProfile, constants: EnergyConstants = EnergyConstants()):
        self.profile = profile
        self.constants = constants
        self._acc = np.zeros(3)
        self._prev = None
        self._sup = 0.0
        self.rows = []

    def push(self, ist: IntegratedState) -> EnergyReport:
        E, D = _weighted_functionals(ist, self.profile)
        if self._prev is not None:
            t_prev, D_prev = self._prev
            self._acc += 0.5 * (ist.t - t_prev) * (np.array(D) + D_prev)
        self._prev = (ist.t, np.array(D))
        eps, gamma = self.profile.law.epsilon, self.profile.law.gamma
        val = sum(
            self.constants.c**k * eps ** (2.0 * k / gamma) * (E[k] + self._acc[k])
            for k in range(3)
        )
        self._sup = max(self._sup, float(val))
        report = EnergyReport(E=tuple(E), D=tuple(D), x_norm_sq=self._sup)
        self.rows.append(report)
        return report


@dataclass(frozen=True)
class SmallnessResult:
    passed: bool
    lhs: float
    rhs: float
    delta0: float
    epsilon: float
    gamma: float

    def as_dict(self):
        return {
            "pass": self.passed,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "delta0": self.delta0,
            "epsilon": self.epsilon,
            "gamma": self.gamma,
        }


def smallness_check(
    ist0: IntegratedState,
    profile: EpsProfile,
    constants: EnergyConstants = EnergyConstants(),
) -> SmallnessResult:
    """Initial gate: sum_k eps^(2k/gamma) int[|d^k W0|^2 / (-p'(vbar)) + |d^k V0|^2]
    against delta0^2 eps^(5/gamma). A fail is a value, not an error."""
    grid = ist0.V.grid
    h = grid.h
    vb = profile.v(grid.x - profile.speed_eps * ist0.t)
    weight = -1.0 / profile.law.dp(vb)
    eps, gamma = profile.law.epsilon, profile.law.gamma
    lhs = 0.0
    Vk, Wk = ist0.V.values, ist0.W.values
    for k in range(3):
        lhs += eps ** (2.0 * k / gamma) * float(
            np.trapezoid(Wk**2 * weight + Vk**2, dx=h)
        )
        Vk, Wk = _d1_array(Vk, h), _d1_array(Wk, h)
    rhs = constants.delta0**2 * eps ** (5.0 / gamma)
    return SmallnessResult(
        passed=lhs <= rhs,
        lhs=float(lhs),
        rhs=float(rhs),
        delta0=constants.delta0,
        epsilon=eps,
        gamma=gamma,
    )


def linearized_operator(ist: IntegratedState, profile: EpsProfile):
    """L(V, W) = (-W_x - mu (V_x / vbar)_x, p'(vbar) V_x) at the state's time."""
    grid = ist.V.grid
    h = grid.h
    vb = profile.v(grid.x - profile.speed_eps * ist.t)
    mu = profile.end_states.mu
    Vx = _d1_array(ist.V.values, h)
    Wx = _d1_array(ist.W.values, h)
    L1 = -Wx - mu * _d1_array(Vx / vb, h)
    L2 = profile.law.dp(vb) * Vx
    return L1, L2


def quadratic_remainders(ist: IntegratedState, profile: EpsProfile):
    """F = mu d_x[ln(1 + V_x/vbar) - V_x/vbar] and the pressure remainder G;
    both vanish quadratically at V_x = 0. Raises DomainError when
    1 + V_x/vbar <= 0 (the state left the admissible set)."""
    grid = ist.V.grid
    h = grid.h
    vb = profile.v(grid.x - profile.speed_eps * ist.t)
    mu = profile.end_states.mu
    Vx = _d1_array(ist.V.values, h)
    ratio = Vx / vb
    if np.any(1.0 + ratio <= 0.0):
        raise DomainError("1 + V_x / vbar <= 0: state left the admissible set")
    F = mu * _d1_array(np.log1p(ratio) - ratio, h)
    law = profile.law
    G = -(law.p(vb + Vx) - law.p(vb) - law.dp(vb) * Vx)
    return F, G


def linearization_residual(
    ist1: IntegratedState, ist2: IntegratedState, profile: EpsProfile
):
    """L2 norms of R = d_t(V, W) + L(V, W) - (F, G) across two recorded states.

    The time derivative is the first-order difference over the recording
    stride; the spatial operators are averaged across the two states so the
    pair is consistent at the midpoint. Boundary stencil rows are excluded
    from the norms."""
    if not ist2.t > ist1.t:
        raise ValueError("states must be time-ordered")
    grid = ist1.V.grid
    h = grid.h
    dtau = ist2.t - ist1.t
    L11, L21 = linearized_operator(ist1, profile)
    L12, L22 = linearized_operator(ist2, profile)
    F1, G1 = quadratic_remainders(ist1, profile)
    F2, G2 = quadratic_remainders(ist2, profile)
    R1 = (ist2.V.values - ist1.V.values) / dtau + 0.5 * (L11 + L12) - 0.5 * (F1 + F2)
    R2 = (ist2.W.values - ist1.W.values) / dtau + 0.5 * (L21 + L22) - 0.5 * (G1 + G2)
    sl = slice(2, -2)
    x = grid.x
    n1 = float(np.sqrt(np.trapezoid(R1[sl] ** 2, x[sl])))
    n2 = float(np.sqrt(np.trapezoid(R2[sl] ** 2, x[sl])))
    return n1, n2


def l1_diagnostics(state: EpsState, profile: EpsProfile):
    """(||v - vbar||_L1, ||u - ubar||_L1, ||w - wbar||_L1) against the shifted profile."""
    grid = state.v.grid
    h = grid.h
    mu = profile.end_states.mu
    shift = grid.x - profile.speed_eps * state.t
    u = state_velocity(state, mu).values
    dv = np.abs(state.v.values - profile.v(shift))
    du = np.abs(u - profile.u(shift))
    dw = np.abs(state.w.values - profile.w(shift))
    return (
        float(np.trapezoid(dv, dx=h)),
        float(np.trapezoid(du, dx=h)),
        float(np.trapezoid(dw, dx=h)),
    )
