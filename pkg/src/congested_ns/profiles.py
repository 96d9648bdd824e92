"""Traveling-wave profiles: explicit limit front, singular-pressure front, three-zone comparison.

The limit front is closed form (logistic free zone, constant congested zone).
The singular-pressure front is monotone and heteroclinic, so it is built from
the separable form of its profile ODE: x(v) is accumulated by adaptive
quadrature of 1/F between a graded ladder of v-levels, with linearized
exponential tails beyond the switch thresholds near both end states. An
independent initial-value integration (DOP853) cross-checks the table.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator
from scipy.optimize import minimize_scalar

from .errors import (
    InvalidEndStatesError,
    NotConnectableError,
    ProfileEscapedError,
    SpanTooSmallError,
)
from .grid import Grid1D, GridFunction
from .pressure import PressureLaw

_GLX, _GLW = np.polynomial.legendre.leggauss(32)


def _gl(f, a, b):
    """32-point Gauss-Legendre on [a, b]; integrand must be smooth there."""
    m, r = 0.5 * (a + b), 0.5 * (b - a)
    return r * float(np.sum(_GLW * f(m + r * _GLX)))


@dataclass(frozen=True)
class EndStates:
    """Far-field data: congested (v=1, u_minus) on the left, free (v_plus, u_plus) on the right."""

    v_plus: float
    u_minus: float
    u_plus: float
    mu: float = 1.0

    def __post_init__(self):
        if not self.v_plus > 1.0:
            raise InvalidEndStatesError(f"v_plus must exceed 1, got {self.v_plus}")
        if not self.u_minus > self.u_plus:
            raise InvalidEndStatesError(
                f"entropy condition requires u_minus > u_plus, got {self.u_minus} <= {self.u_plus}"
            )
        if not self.mu > 0.0:
            raise InvalidEndStatesError(f"viscosity must be positive, got {self.mu}")

    @property
    def speed(self) -> float:
        return (self.u_minus - self.u_plus) / (self.v_plus - 1.0)


def limit_speed(end_states: EndStates) -> float:
    """Shock speed of the limit front, (u_- - u_+)/(v_+ - 1) > 0."""
    return end_states.speed


@dataclass(frozen=True)
class LimitProfile:
    """Closed-form limit front: congested at v=1 on x<0, logistic on x>0.

    The effective velocity w = u - mu * d_x ln v collapses to a step
    (u_minus for x<0, u_plus for x>0) and the congested pressure is the
    constant p_minus = s^2 (v_plus - 1).
    """

    end_states: EndStates
    speed: float
    p_minus: float

    @classmethod
    def from_end_states(cls, end_states: EndStates) -> "LimitProfile":
        s = limit_speed(end_states)
        return cls(end_states=end_states, speed=s, p_minus=s**2 * (end_states.v_plus - 1.0))

    def v(self, x):
        scalar = np.isscalar(x)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        es, s = self.end_states, self.speed
        out = np.ones_like(x)
        m = x > 0
        out[m] = es.v_plus / (
            1.0 + (es.v_plus - 1.0) * np.exp(-s * es.v_plus * x[m] / es.mu)
        )
        return float(out[0]) if scalar else out

    def u(self, x):
        es, s = self.end_states, self.speed
        return es.u_plus + s * es.v_plus - s * self.v(x)

    def w(self, x):
        """Step function; the value at x=0 is the right limit u_plus."""
        scalar = np.isscalar(x)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        es = self.end_states
        out = np.where(x < 0, es.u_minus, es.u_plus)
        return float(out[0]) if scalar else out

    def p(self, x):
        """Congested pressure p_minus for x<=0, zero in the free zone."""
        scalar = np.isscalar(x)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.where(x <= 0, self.p_minus, 0.0)
        return float(out[0]) if scalar else out

    def dv(self, x):
        """d_x v; on x>0 the logistic relation (s/mu) v (v_plus - v), zero on x<0.

        At x=0 the right limit is returned (used for interface traces).
        """
        scalar = np.isscalar(x)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        es, s = self.end_states, self.speed
        vv = np.atleast_1d(self.v(x))
        out = np.where(x >= 0, (s / es.mu) * vv * (es.v_plus - vv), 0.0)
        return float(out[0]) if scalar else out

    def du(self, x):
        return -self.speed * self.dv(x)


def limit_profile_eval(profile: LimitProfile, x):
    """Evaluate (v, u, w, p) of the limit front; exact, no discretization."""
    return profile.v(x), profile.u(x), profile.w(x), profile.p(x)


def eps_speed(law: PressureLaw, end_states: EndStates) -> float:
    """Front speed sqrt((1 - p(v_plus)) / (v_plus - v_minus^eps)).

    The denominator uses v_minus^eps so that both end states are exact
    equilibria of the profile ODE; ``eps_speed_printed`` keeps the
    (v_plus - 1) variant for comparison.
    """
    v_plus = end_states.v_plus
    p_plus = law.p(v_plus)
    if p_plus >= 1.0:
        raise NotConnectableError(
            f"end states not connectable: p(v_plus) = {p_plus} >= 1 "
            f"(v_plus too close to 1 for epsilon = {law.epsilon})"
        )
    v_minus = law.v_minus
    if v_plus <= v_minus:
        raise NotConnectableError(
            f"v_plus = {v_plus} does not exceed v_minus^eps = {v_minus}"
        )
    return float(np.sqrt((1.0 - p_plus) / (v_plus - v_minus)))


def eps_speed_printed(law: PressureLaw, end_states: EndStates) -> float:
    """Speed with denominator (v_plus - 1); differs from eps_speed by O(eps^(1/gamma))."""
    p_plus = law.p(end_states.v_plus)
    if p_plus >= 1.0:
        raise NotConnectableError(f"end states not connectable: p(v_plus) = {p_plus} >= 1")
    return float(np.sqrt((1.0 - p_plus) / (end_states.v_plus - 1.0)))


@dataclass(frozen=True)
class OdeControls:
    """Tolerances and graded-ladder parameters for profile construction."""

    rtol: float = 1e-12
    atol: float = 1e-16
    far_field_tol: float = 1e-8
    tail_switch_left: float = 1e-6     # x (v - v_minus) / eps^(1/gamma) at the left switch
    tail_switch_right: float = 1e-13   # x (v_plus - v) / (v_plus - 1) at the right switch
    ladder_ratio: float = 0.8
    n_mid: int = 200
    n_transition: int = 160
    check_residual: bool = True


@dataclass(frozen=True)
class EpsProfile:
    """Monotone singular-pressure front, normalized by v(0) = 1 + eps^(1/(gamma+1)).

    ``x_nodes``/``v_nodes`` is the strictly monotone construction table;
    evaluation uses monotone interpolation between nodes and linearized
    exponential tails beyond them. All derived fields (u, w, p, d_x v) are
    analytic in v, so no finite differencing enters the profile itself.
    """

    law: PressureLaw
    end_states: EndStates
    speed_eps: float
    speed_eps_printed: float
    v_minus_eps: float
    u_plus_eps: float
    x_nodes: np.ndarray = field(repr=False)
    v_nodes: np.ndarray = field(repr=False)
    lam_left: float
    lam_right: float
    x_span: tuple
    residual_max: float
    _interp: PchipInterpolator = field(repr=False)

    @property
    def v_center(self) -> float:
        return 1.0 + self.law.epsilon ** (1.0 / (self.law.gamma + 1.0))

    def rhs(self, v):
        """Right-hand side F(v) of the profile ODE v' = F(v)."""
        es, s = self.end_states, self.speed_eps
        return (
            np.asarray(v, dtype=float)
            / (es.mu * s)
            * (s**2 * (es.v_plus - v) + self.law.p(es.v_plus) - self.law.p(v))
        )

    def v(self, x):
        scalar = np.isscalar(x)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(x)
        x0, x1 = self.x_nodes[0], self.x_nodes[-1]
        lo, hi = x <= x0, x >= x1
        mid = ~(lo | hi)
        out[lo] = self.v_minus_eps + (self.v_nodes[0] - self.v_minus_eps) * np.exp(
            self.lam_left * (x[lo] - x0)
        )
        out[hi] = self.end_states.v_plus - (
            self.end_states.v_plus - self.v_nodes[-1]
        ) * np.exp(-self.lam_right * (x[hi] - x1))
        if mid.any():
            out[mid] = self._interp(x[mid])
        return float(out[0]) if scalar else out

    def dv(self, x):
        return self.rhs(self.v(x))

    def u(self, x):
        return self.end_states.u_minus - self.speed_eps * (self.v(x) - self.v_minus_eps)

    def w(self, x):
        vv = self.v(x)
        return (
            self.end_states.u_minus
            - self.speed_eps * (vv - self.v_minus_eps)
            - self.end_states.mu * self.rhs(vv) / vv
        )

    def p(self, x):
        return self.law.p(self.v(x))

    def sample(self, grid: Grid1D):
        """GridFunctions (v, u, w, p) on a uniform grid."""
        x = grid.x
        return (
            GridFunction(grid, self.v(x)),
            GridFunction(grid, self.u(x)),
            GridFunction(grid, self.w(x)),
            GridFunction(grid, self.p(x)),
        )


def _levels(law: PressureLaw, v_minus: float, v_plus: float, v0: float, ctl: OdeControls):
    """Graded v-ladder: geometric toward both end states, log-spaced across the
    transition scale eps^(1/gamma), uniform backbone in the middle."""
    eps, gamma = law.epsilon, law.gamma
    lev = []
    d = v0 - v_minus
    d_stop = ctl.tail_switch_left * eps ** (1.0 / gamma)
    while d > d_stop:
        lev.append(v_minus + d)
        d *= ctl.ladder_ratio
    lev.append(v_minus + d_stop)
    vt_max = (v0 - 1.0) / eps ** (1.0 / gamma)
    if vt_max > 1.01:
        for vt in np.geomspace(1.001, vt_max, ctl.n_transition):
            v = 1.0 + eps ** (1.0 / gamma) * vt
            if v_minus + d_stop < v < v0:
                lev.append(v)
    d = v_plus - v0
    d_stop_r = ctl.tail_switch_right * (v_plus - 1.0)
    while d > d_stop_r:
        lev.append(v_plus - d)
        d *= ctl.ladder_ratio
    lev.append(v_plus - d_stop_r)
    pad = 0.02 * (v_plus - v_minus)
    lev.extend(np.linspace(v_minus + pad, v_plus - pad, ctl.n_mid))
    lev.append(v0)
    lev = np.array(sorted(set(lev)))
    return lev[(lev > v_minus) & (lev < v_plus)]


def eps_profile_solve(
    law: PressureLaw,
    end_states: EndStates,
    x_span: tuple | None = None,
    ode_controls: OdeControls = OdeControls(),
) -> EpsProfile:
    """Construct the singular-pressure front and cross-check it against an
    independent initial-value integration of the profile ODE.

    Raises SpanTooSmallError when the requested span does not reach the far
    field within ``far_field_tol``, and ProfileEscapedError if the ODE
    right-hand side loses its sign on the invariant interval.
    """
    ctl = ode_controls
    eps, gamma = law.epsilon, law.gamma
    s = eps_speed(law, end_states)
    s_printed = eps_speed_printed(law, end_states)
    v_minus, v_plus, mu = law.v_minus, end_states.v_plus, end_states.mu
    v0 = 1.0 + eps ** (1.0 / (gamma + 1.0))
    if not v_minus < v0 < v_plus:
        raise NotConnectableError(
            f"shift normalization v(0) = {v0} outside ({v_minus}, {v_plus})"
        )
    p_plus = law.p(v_plus)

    def G(v):
        return s**2 * (v_plus - v) + p_plus - law.p(v)

    def F(v):
        return v / (mu * s) * G(v)

    probe = v_minus + (v_plus - v_minus) * (1.0 - np.cos(np.linspace(0.01, np.pi - 0.01, 401))) / 2.0
    if np.any(G(probe) <= 0.0):
        raise ProfileEscapedError(
            "profile escaped invariant interval: ODE right-hand side loses positivity"
        )

    lev = _levels(law, v_minus, v_plus, v0, ctl)
    j0 = int(np.argmin(np.abs(lev - v0)))
    lev[j0] = v0

    third = (v_plus - v_minus) / 3.0

    def seg(a, b):
        # log-distance substitution keeps the integrand of 1/F bounded near
        # the end states, where F vanishes linearly
        if b <= v_minus + third:
            return _gl(
                lambda t: np.exp(t) / F(v_minus + np.exp(t)),
                np.log(a - v_minus),
                np.log(b - v_minus),
            )
        if a >= v_plus - third:
            return _gl(
                lambda t: np.exp(t) / F(v_plus - np.exp(t)),
                np.log(v_plus - b),
                np.log(v_plus - a),
            )
        return _gl(lambda w: 1.0 / F(w), a, b)

    x = np.zeros_like(lev)
    for j in range(j0, len(lev) - 1):
        x[j + 1] = x[j] + seg(lev[j], lev[j + 1])
    for j in range(j0, 0, -1):
        x[j - 1] = x[j] - seg(lev[j - 1], lev[j])
    if not (np.all(np.diff(x) > 0) and np.all(np.diff(lev) > 0)):
        raise ProfileEscapedError("profile table lost strict monotonicity")

    # analytic linearization rates at the equilibria (F' = v G'/(mu s) there)
    lam_left = v_minus * (-(s**2) - law.dp(v_minus)) / (mu * s)
    lam_right = -v_plus * (-(s**2) - law.dp(v_plus)) / (mu * s)
    if lam_left <= 0 or lam_right <= 0:
        raise ProfileEscapedError("degenerate tail rates; end states are not hyperbolic")

    residual_max = 0.0
    if ctl.check_residual:
        # the integrator's trial evaluations may probe past the invariant
        # interval; clamp them at the hard floor (accepted steps never reach it)
        floor = 1.0 + 1e-3 * eps ** (1.0 / gamma)
        rhs = lambda t, y: [F(max(y[0], floor))]
        for xs, vs in (
            (x[j0:], lev[j0:]),
            (x[: j0 + 1][::-1], lev[: j0 + 1][::-1]),
        ):
            if len(xs) < 2:
                continue
            first = min(abs(xs[-1]) * 0.1, 0.25 * (v0 - v_minus) / F(v0))
            sol = solve_ivp(
                rhs,
                (0.0, xs[-1]),
                [v0],
                method="DOP853",
                rtol=ctl.rtol,
                atol=ctl.atol,
                dense_output=True,
                first_step=max(first, 1e-14),
            )
            if not sol.success:
                raise ProfileEscapedError(f"cross-check integration failed: {sol.message}")
            residual_max = max(residual_max, float(np.max(np.abs(sol.sol(xs)[0] - vs))))

    if x_span is None:
        x_span = (float(x[0] - 37.0 / lam_left), float(x[-1] + 1.0))

    prof = EpsProfile(
        law=law,
        end_states=end_states,
        speed_eps=s,
        speed_eps_printed=s_printed,
        v_minus_eps=v_minus,
        u_plus_eps=end_states.u_minus - s * (v_plus - v_minus),
        x_nodes=x,
        v_nodes=lev,
        lam_left=lam_left,
        lam_right=lam_right,
        x_span=(float(x_span[0]), float(x_span[1])),
        residual_max=residual_max,
        _interp=PchipInterpolator(x, lev),
    )
    edge_left = abs(prof.v(float(x_span[0])) - v_minus)
    edge_right = abs(prof.v(float(x_span[1])) - v_plus)
    if edge_left > ctl.far_field_tol or edge_right > ctl.far_field_tol:
        raise SpanTooSmallError(
            f"far-field tolerance {ctl.far_field_tol} not met within x_span: "
            f"|v - v_minus| = {edge_left:.3e} at {x_span[0]}, "
            f"|v - v_plus| = {edge_right:.3e} at {x_span[1]}"
        )
    return prof


@dataclass(frozen=True)
class TransitionCorrector:
    """Solution of the transition-layer ODE v' = (1 - v^-gamma)/(mu s), v(0) = 2.

    Callable on the whole line: backward of ``xi_floor`` the solution is
    machine-indistinguishable from 1 and is clamped there.
    """

    gamma: float
    mu: float
    speed: float
    x_corr: float
    xi_floor: float
    _fwd: object = field(repr=False)
    _bwd: object = field(repr=False)

    def __call__(self, xi):
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        out = np.ones_like(xi)
        neg = (xi > self.xi_floor) & (xi < 0.0)
        if neg.any():
            out[neg] = self._bwd.sol(xi[neg])[0]
        pos = xi >= 0.0
        if pos.any():
            out[pos] = self._fwd.sol(np.clip(xi[pos], 0.0, self.x_corr))[0]
        return out

    def derivative(self, xi):
        vt = self(xi)
        return (1.0 - vt ** (-self.gamma)) / (self.mu * self.speed)


def transition_corrector_solve(
    gamma: float,
    mu: float,
    speed: float,
    x_corr: float,
    rtol: float = 1e-11,
    atol: float = 1e-13,
) -> TransitionCorrector:
    if speed <= 0 or gamma < 1:
        raise ValueError("need speed > 0 and gamma >= 1")
    rhs = lambda t, y: [(1.0 - y[0] ** (-gamma)) / (mu * speed)]
    fwd = solve_ivp(rhs, (0.0, x_corr), [2.0], method="RK45", rtol=rtol, atol=atol,
                    dense_output=True)
    # backward: v - 1 decays like exp(gamma xi / (mu s)); 37 e-foldings reach round-off
    xi_floor = -37.0 * mu * speed / gamma
    bwd = solve_ivp(rhs, (0.0, xi_floor), [2.0], method="RK45", rtol=rtol, atol=atol,
                    dense_output=True)
    if not (fwd.success and bwd.success):
        raise RuntimeError("transition corrector integration failed")
    return TransitionCorrector(
        gamma=gamma, mu=mu, speed=speed, x_corr=x_corr, xi_floor=xi_floor,
        _fwd=fwd, _bwd=bwd,
    )


@dataclass(frozen=True)
class ZoneParams:
    """Operational constants for the three-zone diagnostics.

    threshold_k is the congested-zone threshold multiplier (any fixed value
    above 1 gives the same asymptotic exponent; 1.3 keeps the measured
    exponent in the asymptotic window across eps down to 1e-6 for gamma <= 2).
    """

    threshold_k: float = 1.3
    scan_width: float = 10.0   # x* window is [-scan_width * eps^(1/(gamma+1)), 0]
    scan_n: int = 200
    fit_n: int = 400
    free_zone_x_max: float = 15.0


@dataclass(frozen=True)
class ZoneReport:
    epsilon: float
    gamma: float
    degenerate: bool
    sup_err_free: float
    x_min: float          # transition-zone width (positive)
    x_min_loc: float      # signed location where v crosses the congested threshold
    x_star: float
    transition_err: float


def three_zone_diagnostics(
    eps_profile: EpsProfile,
    limit_profile: LimitProfile,
    zone_params: ZoneParams = ZoneParams(),
) -> ZoneReport:
    """Quantify the three-zone convergence of the singular front to the limit front.

    Returns the congested-zone boundary location, the free-zone sup error, and
    the transition-layer fit error normalized by max(|x|, h) with the layer
    shift x* optimized inside the scan window.
    """
    zp = zone_params
    eps, gamma = eps_profile.law.epsilon, eps_profile.law.gamma
    if abs(eps_profile.end_states.v_plus - limit_profile.end_states.v_plus) > 0 or (
        eps_profile.end_states.mu != limit_profile.end_states.mu
    ):
        raise InvalidEndStatesError("profiles must share end states")

    x_hi = min(zp.free_zone_x_max, eps_profile.x_span[1])
    xg = np.linspace(0.0, x_hi, 4 * zp.fit_n + 1)
    sup_err_free = float(np.max(np.abs(eps_profile.v(xg) - limit_profile.v(xg))))

    threshold = 1.0 + zp.threshold_k * eps ** (1.0 / gamma)
    if threshold >= eps_profile.v_center:
        return ZoneReport(
            epsilon=eps, gamma=gamma, degenerate=True, sup_err_free=sup_err_free,
            x_min=float("nan"), x_min_loc=float("nan"), x_star=float("nan"),
            transition_err=float("nan"),
        )
    x_min_loc = float(np.interp(threshold, eps_profile.v_nodes, eps_profile.x_nodes))
    x_min = -x_min_loc
    if x_min <= 0:
        return ZoneReport(
            epsilon=eps, gamma=gamma, degenerate=True, sup_err_free=sup_err_free,
            x_min=float("nan"), x_min_loc=x_min_loc, x_star=float("nan"),
            transition_err=float("nan"),
        )

    s_lim = limit_profile.speed
    mu = limit_profile.end_states.mu
    scale = eps ** (1.0 / gamma)
    window = zp.scan_width * eps ** (1.0 / (gamma + 1.0))
    corr = transition_corrector_solve(
        gamma, mu, s_lim, x_corr=(window + x_min) / scale + 10.0
    )

    xf = np.linspace(-x_min, 0.0, zp.fit_n)
    h_fit = xf[1] - xf[0]
    base = eps_profile.v(xf) - limit_profile.v(xf)
    denom = np.maximum(np.abs(xf), h_fit)

    def quotient(x_star):
        model = scale * corr((xf - x_star) / scale)
        return float(np.max(np.abs(base - model) / denom))

    grid = np.linspace(-window, 0.0, zp.scan_n)
    vals = [quotient(g) for g in grid]
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    if lo == hi:
        x_star, terr = grid[i], vals[i]
    else:
        res = minimize_scalar(quotient, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        x_star, terr = float(res.x), float(res.fun)
    return ZoneReport(
        epsilon=eps, gamma=gamma, degenerate=False, sup_err_free=sup_err_free,
        x_min=x_min, x_min_loc=x_min_loc, x_star=x_star, transition_err=terr,
    )


@dataclass(frozen=True)
class ConvergenceRow:
    epsilon: float
    gamma: float
    sup_err_free: float
    x_min: float
    x_star: float
    transition_err: float


@dataclass(frozen=True)
class ConvergenceSummary:
    rows: tuple
    fitted_exponent: float        # least-squares slope of sup_err_free vs eps
    x_min_exponent: float


def convergence_sweep(
    epsilons,
    gamma: float,
    end_states: EndStates,
    zone_params: ZoneParams = ZoneParams(),
    ode_controls: OdeControls = OdeControls(),
) -> ConvergenceSummary:
    """Three-zone diagnostics over an epsilon sweep with log-log slope fits."""
    limit = LimitProfile.from_end_states(end_states)
    rows = []
    for eps in epsilons:
        law = PressureLaw(epsilon=float(eps), gamma=float(gamma))
        prof = eps_profile_solve(law, end_states, ode_controls=ode_controls)
        rep = three_zone_diagnostics(prof, limit, zone_params)
        rows.append(
            ConvergenceRow(
                epsilon=float(eps), gamma=float(gamma),
                sup_err_free=rep.sup_err_free, x_min=rep.x_min,
                x_star=rep.x_star, transition_err=rep.transition_err,
            )
        )
    eps_arr = np.array([r.epsilon for r in rows])
    sup_arr = np.array([r.sup_err_free for r in rows])
    xmin_arr = np.array([r.x_min for r in rows])
    fitted = float(np.polyfit(np.log(eps_arr), np.log(sup_arr), 1)[0])
    ok = np.isfinite(xmin_arr) & (xmin_arr > 0)
    xmin_fit = (
        float(np.polyfit(np.log(eps_arr[ok]), np.log(xmin_arr[ok]), 1)[0])
        if ok.sum() >= 2
        else float("nan")
    )
    return ConvergenceSummary(rows=tuple(rows), fitted_exponent=fitted, x_min_exponent=xmin_fit)
