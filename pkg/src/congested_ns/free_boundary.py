"""Constructive free-boundary scheme on the half-line.

Given compatible initial data that perturb the limit front in the free zone
only, the moving interface and the free-zone fields are computed by a fixed
point: a trial interface path drives (i) an implicit upwinded solve for the
specific volume with log-diffusion, (ii) a linear implicit solve for the
velocity, and (iii) a quadrature update of the path from the velocity trace.
Identity checks certify that the converged triple solves the original
constrained system.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import solve_banded

from .errors import (
    ConstraintViolationError,
    ContractionError,
    DegenerateDataError,
    MonotonicityError,
    NearSingularDenominatorError,
    NewtonError,
)
from .grid import Grid1D, GridFunction, _d1_array, norms
from .profiles import EndStates, LimitProfile


def _d1_at0(f: np.ndarray, h: float) -> float:
    """One-sided second-order first derivative at the left boundary."""
    return (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)


def _d2_at0(f: np.ndarray, h: float) -> float:
    """One-sided second-order second derivative at the left boundary."""
    return (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h**2


@dataclass(frozen=True)
class HalfLineData:
    """Initial data on [0, X]: congested trace at x=0, free for x>0."""

    grid: Grid1D
    v0: GridFunction
    u0: GridFunction
    end_states: EndStates
    trace_tol: float = 1e-9

    def __post_init__(self):
        if self.grid.x_left != 0.0:
            raise ValueError("half-line data must start at x = 0")
        es = self.end_states
        if abs(self.v0.values[0] - 1.0) > self.trace_tol:
            raise DegenerateDataError(
                f"v0(0) = {self.v0.values[0]} must equal 1 (congested trace)"
            )
        if abs(self.u0.values[0] - es.u_minus) > self.trace_tol:
            raise DegenerateDataError(
                f"u0(0) = {self.u0.values[0]} must equal u_minus = {es.u_minus}"
            )
        if np.any(self.v0.values[1:] <= 1.0):
            raise ConstraintViolationError("v0 must exceed 1 for x > 0")

    @property
    def mu(self) -> float:
        return self.end_states.mu


def traveling_wave_data(end_states: EndStates, x_max: float, n: int) -> HalfLineData:
    """Exact limit-front samples on [0, x_max]; the canonical oracle data."""
    grid = Grid1D(0.0, x_max, n)
    profile = LimitProfile.from_end_states(end_states)
    v0 = profile.v(grid.x)
    v0[0] = 1.0
    u0 = profile.u(grid.x)
    return HalfLineData(grid=grid, v0=GridFunction(grid, v0),
                        u0=GridFunction(grid, u0), end_states=end_states)


def perturbed_traveling_wave_data(
    end_states: EndStates,
    x_max: float,
    n: int,
    amplitude: float,
    center: float,
    width: float,
) -> HalfLineData:
    """Limit-front data plus a compact Gaussian bump on v0 and u0 away from 0.

    The neighborhood of the interface is left untouched (the bump must sit at
    center - 6*width > 0), so all traces and the compatibility bracket are
    unchanged."""
    if center - 6.0 * width <= 0.0:
        raise ValueError("perturbation must leave a neighborhood of x = 0 untouched")
    base = traveling_wave_data(end_states, x_max, n)
    x = base.grid.x
    bump = amplitude * np.exp(-(((x - center) / width) ** 2))
    return replace(
        base,
        v0=GridFunction(base.grid, base.v0.values + bump),
        u0=GridFunction(base.grid, base.u0.values + bump),
    )


def h3_bracket_traveling_wave(end_states: EndStates) -> float:
    """Analytic value of the compatibility bracket on limit-front data:
    (s^2 (v_+ - 1)(v_+ - 2)/mu) (s + 1). Zero exactly when v_+ = 2."""
    s = end_states.speed
    return (
        s**2
        * (end_states.v_plus - 1.0)
        * (end_states.v_plus - 2.0)
        / end_states.mu
        * (s + 1.0)
    )


@dataclass(frozen=True)
class HypothesisReport:
    h1_ok: bool
    h2_norms: tuple           # discrete H^3 norms of (v0 - vbar, u0 - ubar)
    h3_residual: float
    h3_ok: bool
    h4_ok: bool
    dv0_trace: float
    du0_trace: float
    interface_speed0: float


def validate_hypotheses(data: HalfLineData, tol: float = 1e-6) -> HypothesisReport:
    """Evaluate the compatibility bracket and non-degeneracy traces.

    The bracket is evaluated exactly as printed with one-sided second-order
    stencils; ``tol`` bounds |bracket| relative to the sum of its term
    magnitudes. Non-degeneracy asks for a rising volume trace and a positive
    initial interface speed."""
    h = data.grid.h
    v0, u0 = data.v0.values, data.u0.values
    dv0 = _d1_at0(v0, h)
    du0 = _d1_at0(u0, h)
    ddv0 = _d2_at0(v0, h)
    if dv0 == 0.0:
        raise DegenerateDataError("d_x v0(0+) = 0: interface ODE undefined")
    mu = data.mu
    terms = (-(du0**2) / dv0, -mu * dv0 * du0, mu * ddv0)
    h3_residual = float(sum(terms))
    scale = max(1.0, sum(abs(t) for t in terms))
    h3_ok = abs(h3_residual) <= tol * scale

    es = data.end_states
    h1_ok = (
        abs(v0[0] - 1.0) <= data.trace_tol
        and abs(u0[0] - es.u_minus) <= data.trace_tol
        and abs(v0[-1] - es.v_plus) <= 1e-6
        and abs(u0[-1] - es.u_plus) <= 1e-6
    )
    profile = LimitProfile.from_end_states(es)
    dev_v = GridFunction(data.grid, v0 - profile.v(data.grid.x))
    dev_u = GridFunction(data.grid, u0 - profile.u(data.grid.x))
    h2_norms = (norms(dev_v, 3).h_full, norms(dev_u, 3).h_full)

    speed0 = -du0 / dv0
    h4_ok = dv0 > 0.0 and speed0 > 0.0 and bool(np.all(v0[1:] > 1.0))
    return HypothesisReport(
        h1_ok=h1_ok,
        h2_norms=h2_norms,
        h3_residual=h3_residual,
        h3_ok=h3_ok,
        h4_ok=h4_ok,
        dv0_trace=float(dv0),
        du0_trace=float(du0),
        interface_speed0=float(speed0),
    )


@dataclass(frozen=True)
class W0Interpolant:
    """Initial effective velocity with far-side extensions.

    Left of 0 the trace value u_- - mu d_x v0(0+) is frozen; beyond the data
    the far-field value u_+ stands in (its mismatch at the last node is
    checked at construction)."""

    x: np.ndarray = field(repr=False)
    w0: np.ndarray = field(repr=False)
    dw0: np.ndarray = field(repr=False)
    left_value: float
    right_value: float

    def __call__(self, q):
        return np.interp(q, self.x, self.w0, left=self.left_value, right=self.right_value)

    def derivative(self, q):
        return np.interp(q, self.x, self.dw0, left=0.0, right=0.0)


def w0_build(data: HalfLineData, far_field_tol: float = 1e-6) -> W0Interpolant:
    """w0 = u0 - mu d_x ln v0 sampled with second-order stencils."""
    h = data.grid.h
    v0, u0 = data.v0.values, data.u0.values
    w0 = u0 - data.mu * _d1_array(np.log(v0), h)
    left = data.end_states.u_minus - data.mu * _d1_at0(v0, h)
    if abs(w0[-1] - data.end_states.u_plus) > far_field_tol:
        raise DegenerateDataError(
            f"w0 does not reach u_plus at the right edge: |{w0[-1]} - "
            f"{data.end_states.u_plus}| > {far_field_tol}"
        )
    return W0Interpolant(
        x=data.grid.x,
        w0=w0,
        dw0=_d1_array(w0, h),
        left_value=float(left),
        right_value=float(data.end_states.u_plus),
    )


@dataclass(frozen=True)
class FBConfig:
    T: float
    dt: float
    picard_tol: float = 1e-8
    picard_max: int = 25
    newton_tol: float = 1e-11
    newton_max: int = 40
    denom_floor_rel: float = 1e-6
    t_halvings: int = 3
    aitken: bool = True

    def __post_init__(self):
        if not (self.T > 0 and self.dt > 0):
            raise ValueError("T and dt must be positive")


@dataclass(frozen=True)
class InterfacePath:
    times: np.ndarray
    x_tilde: np.ndarray
    x_tilde_prime: np.ndarray

    def __post_init__(self):
        if abs(self.x_tilde[0]) > 0:
            raise ValueError("interface path must start at 0")

    @property
    def h2_norm(self) -> float:
        t = self.times
        xt, xtp = self.x_tilde, self.x_tilde_prime
        if len(t) < 3:
            return float("nan")
        dt = t[1] - t[0]
        xtpp = _d1_array(xtp, dt)
        return float(
            np.sqrt(
                np.trapezoid(xt**2, t)
                + np.trapezoid(xtp**2, t)
                + np.trapezoid(xtpp**2, t)
            )
        )


def _upwind_gradient(f: np.ndarray, h: float) -> np.ndarray:
    """Second-order one-sided gradient from the right (inflow side) on interior
    rows; the last interior row falls back to the central stencil."""
    tr = np.zeros_like(f)
    tr[1:-2] = (-3.0 * f[1:-2] + 4.0 * f[2:-1] - f[3:]) / (2.0 * h)
    tr[-2] = (f[-1] - f[-3]) / (2.0 * h)
    return tr


def _transport_bands(yp: float, dt: float, h: float, n: int):
    """Jacobian bands of G_i -= dt*yp*(d_x f)_i for the upwinded gradient."""
    sub = np.zeros(n)
    dia = np.zeros(n)
    sup1 = np.zeros(n)
    sup2 = np.zeros(n)
    c = dt * yp / (2.0 * h)
    dia[1:-2] += 3.0 * c
    sup1[2:-1] += -4.0 * c
    sup2[3:] += c
    sup1[-1] += -c
    sub[-3] += c
    return sub, dia, sup1, sup2


def _solve_b12(sub, dia, sup1, sup2, rhs):
    ab = np.zeros((4, len(dia)))
    ab[0], ab[1], ab[2], ab[3] = sup2, sup1, dia, sub
    return solve_banded((1, 2), ab, rhs)


def v_step(
    y_path: InterfacePath, data: HalfLineData, cfg: FBConfig, w0: W0Interpolant
) -> np.ndarray:
    """March the volume equation over [0, T] for a given trial path.

    Implicit Euler with the upwinded moving-frame transport and Newton on the
    log-diffusion; Dirichlet (1, v_plus). Returns v at all time nodes."""
    grid = data.grid
    h, n = grid.h, grid.n
    x = grid.x
    mu = data.mu
    dt = cfg.dt
    nt = len(y_path.times) - 1
    v_plus = data.end_states.v_plus
    V = np.empty((nt + 1, n))
    V[0] = data.v0.values
    for k in range(nt):
        yp = y_path.x_tilde_prime[k + 1]
        rhs = V[k] + dt * w0.derivative(x + y_path.x_tilde[k + 1])
        rhs[0], rhs[-1] = 1.0, v_plus
        tb = _transport_bands(yp, dt, h, n)
        vk = V[k].copy()
        trace = []
        converged = False
        for _ in range(cfg.newton_max):
            lnv = np.log(vk)
            res = vk - rhs
            res[1:-1] -= dt * mu * (lnv[2:] - 2.0 * lnv[1:-1] + lnv[:-2]) / h**2
            res[1:-1] -= dt * yp * _upwind_gradient(vk, h)[1:-1]
            res[0] = vk[0] - 1.0
            res[-1] = vk[-1] - v_plus
            rmax = float(np.max(np.abs(res)))
            trace.append(rmax)
            if rmax < cfg.newton_tol:
                converged = True
                break
            sub = np.zeros(n)
            dia = np.ones(n)
            sup1 = np.zeros(n)
            sup2 = np.zeros(n)
            dia[1:-1] += dt * mu * 2.0 / (h**2 * vk[1:-1])
            sup1[2:] += -dt * mu / (h**2 * vk[2:])
            sub[:-2] += -dt * mu / (h**2 * vk[:-2])
            sub = sub + tb[0]
            dia = dia + tb[1]
            sup1 = sup1 + tb[2]
            sup2 = sup2 + tb[3]
            sup1[1] = 0.0
            sup2[2] = 0.0
            sub[n - 2] = 0.0
            upd = _solve_b12(sub, dia, sup1, sup2, -res)
            lam = 1.0
            for _ in range(8):
                cand = vk + lam * upd
                if cand[0] > 0.0 and np.min(cand[1:-1]) > 1.0:
                    break
                lam *= 0.5
            else:
                raise NewtonError(
                    f"volume step at t = {y_path.times[k + 1]:.6g}: damping exhausted",
                    trace=trace,
                )
            vk = vk + lam * upd
        if not converged:
            raise NewtonError(
                f"volume step at t = {y_path.times[k + 1]:.6g} did not converge "
                f"(residual {trace[-1]:.3e})",
                trace=trace,
            )
        if np.min(vk[1:]) <= 1.0:
            raise ConstraintViolationError(
                f"v <= 1 in the interior at t = {y_path.times[k + 1]:.6g}"
            )
        V[k + 1] = vk
    return V


def u_step(
    y_path: InterfacePath, v: np.ndarray, data: HalfLineData, cfg: FBConfig
) -> np.ndarray:
    """March the velocity equation with the frozen volume field; one banded
    solve per step (the equation is linear in u)."""
    grid = data.grid
    h, n = grid.h, grid.n
    mu = data.mu
    dt = cfg.dt
    nt = len(y_path.times) - 1
    es = data.end_states
    U = np.empty((nt + 1, n))
    U[0] = data.u0.values
    for k in range(nt):
        yp = y_path.x_tilde_prime[k + 1]
        a = 1.0 / v[k + 1]
        am = np.zeros(n)
        ap = np.zeros(n)
        am[1:-1] = 0.5 * (a[1:-1] + a[:-2])
        ap[1:-1] = 0.5 * (a[1:-1] + a[2:])
        sub = np.zeros(n)
        dia = np.ones(n)
        sup1 = np.zeros(n)
        sup2 = np.zeros(n)
        dia[1:-1] += dt * mu * (am[1:-1] + ap[1:-1]) / h**2
        sup1[2:] = -dt * mu * ap[1:-1] / h**2
        sub[:-2] = -dt * mu * am[1:-1] / h**2
        tb = _transport_bands(yp, dt, h, n)
        sub = sub + tb[0]
        dia = dia + tb[1]
        sup1 = sup1 + tb[2]
        sup2 = sup2 + tb[3]
        sup1[1] = 0.0
        sup2[2] = 0.0
        sub[n - 2] = 0.0
        rhs = U[k].copy()
        rhs[0], rhs[-1] = es.u_minus, es.u_plus
        U[k + 1] = _solve_b12(sub, dia, sup1, sup2, rhs)
    return U


def interface_update(
    u: np.ndarray,
    y_path: InterfacePath,
    w0: W0Interpolant,
    data: HalfLineData,
    cfg: FBConfig,
) -> InterfacePath:
    """New path z(t) = -mu int_0^t d_x u(tau, 0+) / (u_- - w0(y(tau))) dtau by
    trapezoid quadrature; the integrand is the new path derivative."""
    h = data.grid.h
    es = data.end_states
    t = y_path.times
    floor = cfg.denom_floor_rel * abs(es.u_minus - es.u_plus)
    den = es.u_minus - w0(y_path.x_tilde)
    if np.any(np.abs(den) < floor):
        k = int(np.argmin(np.abs(den)))
        raise NearSingularDenominatorError(
            f"u_- - w0(y) = {den[k]:.3e} below floor {floor:.3e} at t = {t[k]:.6g} "
            "(loss of non-degeneracy along the flow)"
        )
    integrand = np.array(
        [-data.mu * _d1_at0(u[k], h) for k in range(len(t))]
    ) / den
    z = np.concatenate(
        [[0.0], np.cumsum(0.5 * np.diff(t) * (integrand[1:] + integrand[:-1]))]
    )
    return InterfacePath(times=t, x_tilde=z, x_tilde_prime=integrand)


@dataclass(frozen=True)
class FBState:
    t: float
    v_s: GridFunction
    u_s: GridFunction
    w_s: GridFunction
    p_s: float


@dataclass(frozen=True)
class FBSolution:
    data: HalfLineData
    cfg: FBConfig
    w0: W0Interpolant
    path: InterfacePath
    v: np.ndarray = field(repr=False)      # (nt+1, n)
    u: np.ndarray = field(repr=False)
    p_s: np.ndarray = field(repr=False)    # congested pressure per time node
    status: str                            # converged | T-reduced-converged
    iterations: int
    picard_history: tuple
    T_effective: float

    def w_values(self, k: int) -> np.ndarray:
        h = self.data.grid.h
        return self.u[k] - self.data.mu * _d1_array(np.log(self.v[k]), h)

    def state(self, k: int) -> FBState:
        grid = self.data.grid
        return FBState(
            t=float(self.path.times[k]),
            v_s=GridFunction(grid, self.v[k]),
            u_s=GridFunction(grid, self.u[k]),
            w_s=GridFunction(grid, self.w_values(k)),
            p_s=float(self.p_s[k]),
        )


def _apply_map(y_path, data, cfg, w0):
    v = v_step(y_path, data, cfg, w0)
    u = u_step(y_path, v, data, cfg)
    z_path = interface_update(u, y_path, w0, data, cfg)
    return z_path, v, u


def check_monotone(path: InterfacePath):
    """Enforce x_tilde' > 0 and x_tilde > 0 past t = 0 along the path."""
    if np.any(path.x_tilde_prime <= 0.0) or np.any(path.x_tilde[1:] <= 0.0):
        raise MonotonicityError(
            "interface lost monotonicity: the scheme requires x_tilde'(t) > 0"
        )


def picard_solve(data: HalfLineData, cfg: FBConfig) -> FBSolution:
    """Fixed-point iteration on the interface path with Aitken relaxation.

    The initial path is the tangent x'(0) t. Convergence is declared on the
    map residual max|A(y) - y| + max|A(y)' - y'| < picard_tol. When the
    budget is exhausted, T is halved and the iteration restarts (local
    existence holds for small T only); monotonicity loss fails immediately."""
    rep = validate_hypotheses(data)
    if not rep.h4_ok:
        raise DegenerateDataError(
            "non-degeneracy fails: need d_x v0(0+) > 0 and positive interface speed"
        )
    w0 = w0_build(data)
    T = cfg.T
    last_history = []
    for halving in range(cfg.t_halvings + 1):
        nt = max(2, int(round(T / cfg.dt)))
        times = np.linspace(0.0, nt * cfg.dt, nt + 1)
        y = InterfacePath(
            times=times,
            x_tilde=rep.interface_speed0 * times,
            x_tilde_prime=np.full(nt + 1, rep.interface_speed0),
        )
        history = []
        prev_delta = np.inf
        theta = 1.0
        r_prev = None
        for it in range(cfg.picard_max):
            z, v, u = _apply_map(y, data, cfg, w0)
            check_monotone(z)
            delta = float(
                np.max(np.abs(z.x_tilde - y.x_tilde))
                + np.max(np.abs(z.x_tilde_prime - y.x_tilde_prime))
            )
            history.append(delta)
            if delta < cfg.picard_tol:
                p_s = z.x_tilde_prime * (
                    data.end_states.u_minus - w0(z.x_tilde)
                )
                status = "converged" if halving == 0 else "T-reduced-converged"
                return FBSolution(
                    data=data, cfg=cfg, w0=w0, path=z, v=v, u=u, p_s=p_s,
                    status=status, iterations=it + 1,
                    picard_history=tuple(history), T_effective=float(times[-1]),
                )
            r = np.concatenate([z.x_tilde - y.x_tilde, z.x_tilde_prime - y.x_tilde_prime])
            if cfg.aitken and r_prev is not None:
                dr = r - r_prev
                nrm = float(np.dot(dr, dr))
                if nrm > 0:
                    theta = float(np.clip(-theta * np.dot(r_prev, dr) / nrm, 0.1, 2.0))
            elif delta >= prev_delta:
                theta = 0.5
            r_prev = r
            prev_delta = delta
            y = InterfacePath(
                times=times,
                x_tilde=y.x_tilde + theta * (z.x_tilde - y.x_tilde),
                x_tilde_prime=y.x_tilde_prime + theta * (z.x_tilde_prime - y.x_tilde_prime),
            )
        last_history = history
        T = 0.5 * T
    raise ContractionError(
        f"no contraction within {cfg.picard_max} iterations down to T = {2 * T}",
        history=last_history,
    )


@dataclass(frozen=True)
class IdentityReport:
    res_transport: float
    res_edo1: float
    res_edo2: float
    res_bcw: float
    p_s_min: float
    v_s_min: float
    p_s_equiv: float     # max |p_s - (-mu d_x u_s(0+))|

    @property
    def complementarity_ok(self) -> bool:
        return self.p_s_min >= 0.0 and self.v_s_min > 1.0


def identity_rows(solution: FBSolution, stride: int = 1):
    """Per-time-node identity residuals; the report takes sups over these."""
    data, w0, path = solution.data, solution.w0, solution.path
    h = data.grid.h
    x = data.grid.x
    mu = data.mu
    es = data.end_states
    rows = []
    for k in range(0, len(path.times), stride):
        vk, uk = solution.v[k], solution.u[k]
        wk = solution.w_values(k)
        xt, xtp = path.x_tilde[k], path.x_tilde_prime[k]
        transport = float(np.max(np.abs(wk - w0(x + xt))))
        edo1 = float(abs(es.u_minus - mu * _d1_at0(vk, h) - w0(xt)))
        edo2 = float(abs(xtp * _d1_at0(vk, h) + _d1_at0(uk, h)))
        bcw = float(
            abs(
                mu * _d1_at0(wk, h)
                + xtp * wk[0]
                - xtp * w0(xt)
                - mu * w0.derivative(xt)
            )
        )
        rows.append(
            {
                "t": float(path.times[k]),
                "x_tilde": float(xt),
                "x_tilde_prime": float(xtp),
                "p_s": float(solution.p_s[k]),
                "res_EDO1": edo1,
                "res_BCw": bcw,
                "res_transport": transport,
                "res_EDO2": edo2,
            }
        )
    return rows


def identity_checks(solution: FBSolution, stride: int = 1) -> IdentityReport:
    """Sup residuals of the transport identity, the boundary identities, and
    the complementarity signs over the stored trajectory."""
    rows = identity_rows(solution, stride)
    h = solution.data.grid.h
    mu = solution.data.mu
    equiv = max(
        abs(solution.p_s[k] + mu * _d1_at0(solution.u[k], h))
        for k in range(0, len(solution.path.times), stride)
    )
    return IdentityReport(
        res_transport=max(r["res_transport"] for r in rows),
        res_edo1=max(r["res_EDO1"] for r in rows),
        res_edo2=max(r["res_EDO2"] for r in rows),
        res_bcw=max(r["res_BCw"] for r in rows),
        p_s_min=float(np.min(solution.p_s)),
        v_s_min=float(np.min(solution.v[:, 1:])),
        p_s_equiv=float(equiv),
    )


def unshift(solution: FBSolution):
    """Full-line evaluator: (v, u, p)(t_k, x) with the congested extension
    (1, u_minus, p_s(t_k)) left of the interface and p = 0 on the free side."""
    path = solution.path
    xs = solution.data.grid.x

    def evaluate(k: int, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xt = path.x_tilde[k]
        shifted = x - xt
        v = np.where(
            shifted < 0.0, 1.0, np.interp(shifted, xs, solution.v[k])
        )
        u = np.where(
            shifted < 0.0,
            solution.data.end_states.u_minus,
            np.interp(shifted, xs, solution.u[k]),
        )
        p = np.where(shifted < 0.0, solution.p_s[k], 0.0)
        return v, u, p

    return evaluate
