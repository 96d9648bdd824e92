"""Experiment runner: scenario configuration, execution, CSV/JSON emission.

Exit codes: 0 ok, 2 config error, 3 solver failure, 4 identity/residual gate
exceeded. Identical config (including seed) yields byte-identical artifacts.
"""

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .csvio import write_csv, write_json
from .energy import (
    EnergyConstants,
    EnergyTracker,
    IntegratedState,
    integrated_vars,
    integrated_vars_pair,
    l1_diagnostics,
    smallness_check,
)
from .errors import CongestedNSError, ConfigError
from .eps_solver import (
    PerturbationSpec,
    SolverConfig,
    _dt_guard,
    build_initial,
    simulate,
    state_velocity,
)
from .free_boundary import (
    FBConfig,
    identity_checks,
    identity_rows,
    perturbed_traveling_wave_data,
    picard_solve,
    traveling_wave_data,
    validate_hypotheses,
)
from .grid import Grid1D, GridFunction, cumulative
from .pressure import PressureLaw
from .profiles import (
    EndStates,
    LimitProfile,
    ZoneParams,
    convergence_sweep,
    eps_profile_solve,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IDENTITY = 4

_COMMON = {
    "v_plus": (float, 2.0, "free specific volume v_+ > 1"),
    "u_minus": (float, 1.0, "congested velocity u_-"),
    "u_plus": (float, 0.0, "free velocity u_+ < u_-"),
    "mu": (float, 1.0, "viscosity"),
    "out_dir": (str, "", "output directory (default out_<scenario>)"),
    "seed": (int, 0, "seed recorded in metadata (runs are deterministic)"),
}

_SCENARIOS = {
    "profile": {
        "x_left": (float, -5.0, "left edge of the sampling span"),
        "x_right": (float, 15.0, "right edge of the sampling span"),
        "n": (int, 2001, "node count"),
    },
    "eps-profile": {
        "epsilon": (float, 1e-2, "pressure scale"),
        "gamma": (float, 1.0, "singularity exponent"),
        "x_left": (float, 0.0, "left edge (0 selects the automatic span)"),
        "x_right": (float, 0.0, "right edge (0 selects the automatic span)"),
        "n": (int, 2001, "node count of the exported grid"),
        "residual_tol": (float, 0.0, "if > 0, exit 4 when the cross-check residual exceeds it"),
    },
    "converge": {
        "epsilons": (str, "1e-2,1e-3,1e-4,1e-5", "comma-separated epsilon sweep"),
        "gamma": (float, 1.0, "singularity exponent"),
        "threshold_k": (float, 1.3, "congested-zone threshold multiplier"),
    },
    "simulate": {
        "epsilon": (float, 1e-2, "pressure scale"),
        "gamma": (float, 1.0, "singularity exponent"),
        "half_width": (float, 30.0, "domain is [-L, L]"),
        "n": (int, 1501, "node count"),
        "dt": (float, 1e-3, "time step"),
        "t_final": (float, 1.0, "final time"),
        "stride": (int, 100, "observer stride in steps"),
        "shape": (str, "dipole", "perturbation shape (dipole or bump)"),
        "amplitude": (float, 0.0, "perturbation amplitude"),
        "center": (float, 3.0, "perturbation center"),
        "width": (float, 0.5, "perturbation width"),
        "snapshots": (int, 2, "number of state_<t>.csv files (first/last included)"),
    },
    "stability": {
        "epsilon": (float, 1e-2, "pressure scale"),
        "gamma": (float, 1.0, "singularity exponent"),
        "half_width": (float, 50.0, "domain is [-L, L]"),
        "n": (int, 2501, "node count"),
        "dt": (float, 1.25e-3, "time step (fixed; must satisfy the explicit budget)"),
        "t_final": (float, 7.0, "final time"),
        "stride": (int, 800, "observer stride in steps"),
        "amplitude": (float, 0.0, "dipole amplitude; 0 scales it to pass the gate"),
        "center": (float, 3.0, "dipole center"),
        "width": (float, 0.5, "dipole width"),
        "delta0": (float, 0.1, "smallness constant of the initial gate"),
        "c_weight": (float, 0.1, "geometric weight of the running norm"),
    },
    "free-boundary": {
        "oracle_tw": (bool, True, "use traveling-wave initial data"),
        "x_max": (float, 30.0, "half-line truncation"),
        "n": (int, 3001, "node count"),
        "dt": (float, 1e-3, "time step"),
        "t_final": (float, 0.5, "final time T"),
        "picard_tol": (float, 1e-8, "fixed-point tolerance"),
        "picard_max": (int, 25, "fixed-point budget per T"),
        "perturb_amplitude": (float, 0.0, "bump amplitude added to v0, u0"),
        "perturb_center": (float, 5.0, "bump center (> 6 widths from 0)"),
        "perturb_width": (float, 0.5, "bump width"),
        "snapshots": (int, 2, "number of fb_state_<t>.csv files"),
        "identity_tol": (float, 0.0, "if > 0, exit 4 when any identity residual exceeds it"),
    },
}


def _flag(name):
    return "--" + name.replace("_", "-")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="congested-ns",
        description="Numerical laboratory for 1D free-congested Navier-Stokes flows",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="scenario", required=True)
    for name, extra in _SCENARIOS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=str, default=None, help="JSON config file")
        for key, (typ, default, help_text) in {**_COMMON, **extra}.items():
            if typ is bool:
                sp.add_argument(_flag(key), dest=key, action="store_true",
                                default=argparse.SUPPRESS, help=help_text)
                sp.add_argument(_flag("no_" + key), dest=key, action="store_false",
                                default=argparse.SUPPRESS)
            else:
                sp.add_argument(_flag(key), dest=key, type=typ,
                                default=argparse.SUPPRESS, help=help_text)
    return parser


def parse_config(argv):
    """Merge defaults < config file < explicit flags; reject unknown keys."""
    parser = _build_parser()
    ns = parser.parse_args(argv)
    scenario = ns.scenario
    spec = {**_COMMON, **_SCENARIOS[scenario]}
    cfg = {key: default for key, (_, default, _h) in spec.items()}
    if getattr(ns, "config", None):
        try:
            loaded = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {ns.config}: {exc}") from exc
        unknown = set(loaded) - set(spec)
        if unknown:
            raise ConfigError(
                f"unknown config keys for scenario {scenario}: {sorted(unknown)}"
            )
        for key, value in loaded.items():
            typ = spec[key][0]
            cfg[key] = typ(value) if typ is not bool else bool(value)
    for key in spec:
        if hasattr(ns, key):
            cfg[key] = getattr(ns, key)
    _validate(scenario, cfg)
    return scenario, cfg


def _validate(scenario, cfg):
    if cfg["v_plus"] <= 1.0:
        raise ConfigError(f"v_plus must exceed 1 (constraint v >= 1), got {cfg['v_plus']}")
    if cfg["u_minus"] <= cfg["u_plus"]:
        raise ConfigError("entropy condition requires u_minus > u_plus")
    if cfg["mu"] <= 0.0:
        raise ConfigError("mu must be positive")
    if "gamma" in cfg and cfg["gamma"] < 1.0:
        raise ConfigError(f"gamma must be >= 1, got {cfg['gamma']}")
    if "epsilon" in cfg and cfg["epsilon"] <= 0.0:
        raise ConfigError("epsilon must be positive")
    for key in ("dt", "t_final", "x_max", "half_width"):
        if key in cfg and cfg[key] <= 0.0:
            raise ConfigError(f"{key} must be positive")
    if "shape" in cfg and cfg["shape"] not in ("dipole", "bump"):
        raise ConfigError(f"unknown perturbation shape {cfg['shape']!r}")


def _end_states(cfg):
    return EndStates(
        v_plus=cfg["v_plus"], u_minus=cfg["u_minus"], u_plus=cfg["u_plus"], mu=cfg["mu"]
    )


def _out_dir(scenario, cfg):
    out = cfg["out_dir"] or os.environ.get("CONGESTED_NS_OUTDIR", "") or f"out_{scenario}"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _emit_meta(out, scenario, cfg, extra=None):
    write_json(out / "run_config.json", {"scenario": scenario, **cfg})
    meta = {"scenario": scenario, "version": __version__, "config": cfg}
    if extra:
        meta.update(extra)
    write_json(out / "metadata.json", meta)


def run_profile(cfg):
    out = _out_dir("profile", cfg)
    es = _end_states(cfg)
    prof = LimitProfile.from_end_states(es)
    x = np.linspace(cfg["x_left"], cfg["x_right"], cfg["n"])
    rows = [(xi, *map(float, (prof.v([xi])[0], prof.u([xi])[0], prof.w([xi])[0], prof.p([xi])[0])))
            for xi in x]
    write_csv(out / "profile.csv", ["x", "v", "u", "w", "p"], rows)
    _emit_meta(out, "profile", cfg, {"speed": es.speed, "p_minus": prof.p_minus})
    return EXIT_OK


def run_eps_profile(cfg):
    out = _out_dir("eps-profile", cfg)
    es = _end_states(cfg)
    law = PressureLaw(epsilon=cfg["epsilon"], gamma=cfg["gamma"])
    span = None
    if cfg["x_left"] < cfg["x_right"]:
        span = (cfg["x_left"], cfg["x_right"])
    prof = eps_profile_solve(law, es, x_span=span)
    grid = Grid1D(prof.x_span[0], prof.x_span[1], cfg["n"])
    x = grid.x
    v, u, w, p = prof.v(x), prof.u(x), prof.w(x), prof.p(x)
    write_csv(
        out / "eps_profile.csv",
        ["x", "v_eps", "u_eps", "w_eps", "p_eps"],
        list(zip(x, v, u, w, p)),
    )
    _emit_meta(
        out, "eps-profile", cfg,
        {
            "speed_eps": prof.speed_eps,
            "speed_eps_printed": prof.speed_eps_printed,
            "v_minus_eps": prof.v_minus_eps,
            "u_plus_eps": prof.u_plus_eps,
            "residual_max": prof.residual_max,
        },
    )
    if cfg["residual_tol"] > 0 and prof.residual_max > cfg["residual_tol"]:
        print(f"residual {prof.residual_max:.3e} exceeds {cfg['residual_tol']:.3e}",
              file=sys.stderr)
        return EXIT_IDENTITY
    return EXIT_OK


def run_converge(cfg):
    out = _out_dir("converge", cfg)
    es = _end_states(cfg)
    try:
        epsilons = [float(tok) for tok in cfg["epsilons"].split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse epsilons list {cfg['epsilons']!r}") from exc
    if len(epsilons) < 2:
        raise ConfigError("need at least two epsilon values for a sweep")
    summary = convergence_sweep(
        epsilons, cfg["gamma"], es, zone_params=ZoneParams(threshold_k=cfg["threshold_k"])
    )
    rows = [
        (r.epsilon, r.gamma, r.sup_err_free, r.x_min, r.x_star, r.transition_err,
         summary.fitted_exponent)
        for r in summary.rows
    ]
    write_csv(
        out / "convergence.csv",
        ["epsilon", "gamma", "sup_err_free", "x_min", "x_star", "transition_err",
         "fitted_exponent"],
        rows,
    )
    _emit_meta(out, "converge", cfg, {
        "fitted_exponent": summary.fitted_exponent,
        "x_min_exponent": summary.x_min_exponent,
        "target_exponent": 1.0 / (cfg["gamma"] + 1.0),
    })
    return EXIT_OK


def _energy_header():
    return ["t", "E0", "E1", "E2", "D0", "D1", "D2", "X_norm",
            "L1_v", "L1_u", "L1_w", "sup_dev_v", "sup_dev_u", "min_v"]


def _write_state(out, tag, t, x, fields, names):
    write_csv(out / f"{tag}_{t:.6f}.csv", ["x", *names], list(zip(x, *fields)))


def run_simulate(cfg):
    out = _out_dir("simulate", cfg)
    es = _end_states(cfg)
    law = PressureLaw(epsilon=cfg["epsilon"], gamma=cfg["gamma"])
    prof = eps_profile_solve(law, es)
    grid = Grid1D(-cfg["half_width"], cfg["half_width"], cfg["n"])
    spec = PerturbationSpec(
        shape=cfg["shape"], amplitude=cfg["amplitude"],
        center=cfg["center"], width=cfg["width"], seed=cfg["seed"],
    )
    init = build_initial(prof, spec, grid)
    scfg = SolverConfig(dt=cfg["dt"])
    traj = simulate(init, cfg["t_final"], scfg, prof, stride=cfg["stride"])
    tracker = EnergyTracker(prof)
    rows = []
    for state in traj.states:
        ist = integrated_vars(state, prof)
        rep = tracker.push(ist)
        l1v, l1u, l1w = l1_diagnostics(state, prof)
        shift = grid.x - prof.speed_eps * state.t
        u = state_velocity(state, es.mu).values
        rows.append((
            state.t, *rep.E, *rep.D, rep.x_norm_sq, l1v, l1u, l1w,
            float(np.max(np.abs(state.v.values - prof.v(shift)))),
            float(np.max(np.abs(u - prof.u(shift)))),
            float(np.min(state.v.values)),
        ))
    write_csv(out / "energy.csv", _energy_header(), rows)
    ist0 = integrated_vars(traj.states[0], prof)
    write_json(out / "smallness_gate.json",
               {**smallness_check(ist0, prof).as_dict(), "c": EnergyConstants().c})
    n_snap = max(2, cfg["snapshots"])
    idx = np.unique(np.linspace(0, len(traj.states) - 1, n_snap).astype(int))
    for k in idx:
        st = traj.states[k]
        _write_state(out, "state", st.t, grid.x,
                     (st.v.values, state_velocity(st, es.mu).values, st.w.values),
                     ["v", "u", "w"])
    _emit_meta(out, "simulate", cfg, {"min_v_overall": traj.min_v_overall})
    return EXIT_OK


def gate_scaled_amplitude(prof, grid, center, width, delta0, margin=0.5):
    """Dipole amplitude that passes the initial gate with the given margin."""
    law = prof.law
    probe = PerturbationSpec(shape="dipole", amplitude=1.0, center=center, width=width)
    dv = probe.profile(grid.x)
    V = cumulative(GridFunction(grid, dv))
    W = V
    ist = IntegratedState(t=0.0, V=V, W=W)
    res = smallness_check(ist, prof, EnergyConstants(delta0=delta0))
    return float(np.sqrt(margin * res.rhs / res.lhs))


def run_stability(cfg):
    out = _out_dir("stability", cfg)
    es = _end_states(cfg)
    law = PressureLaw(epsilon=cfg["epsilon"], gamma=cfg["gamma"])
    prof = eps_profile_solve(law, es)
    grid = Grid1D(-cfg["half_width"], cfg["half_width"], cfg["n"])
    constants = EnergyConstants(delta0=cfg["delta0"], c=cfg["c_weight"])
    amp = cfg["amplitude"] or gate_scaled_amplitude(
        prof, grid, cfg["center"], cfg["width"], cfg["delta0"]
    )
    spec = PerturbationSpec(shape="dipole", amplitude=amp,
                            center=cfg["center"], width=cfg["width"], seed=cfg["seed"])
    init = build_initial(prof, spec, grid)
    ist0 = integrated_vars(init, prof, constants)
    gate = smallness_check(ist0, prof, constants)
    write_json(out / "smallness_gate.json", {**gate.as_dict(), "c": constants.c})

    # both runs must share the exact time grid (a state-dependent step guard
    # would desynchronize them and alias the background shift into the
    # deviation), and tight Newton keeps stopping noise out of the difference
    scfg = SolverConfig(dt=cfg["dt"], newton_tol=1e-12, cfl_guard=False)
    guard = _dt_guard(init.v.values, grid.h, scfg, law)
    if cfg["dt"] > guard:
        raise ConfigError(
            f"dt = {cfg['dt']} exceeds the explicit-step budget {guard:.3e}; "
            "reduce dt for the paired stability experiment"
        )
    ref_init = build_initial(prof, PerturbationSpec(amplitude=0.0), grid)
    traj_p = simulate(init, cfg["t_final"], scfg, prof, stride=cfg["stride"])
    traj_r = simulate(ref_init, cfg["t_final"], scfg, prof, stride=cfg["stride"])

    tracker = EnergyTracker(prof, constants)
    rows = []
    sup_series = []
    for sp, sr in zip(traj_p.states, traj_r.states):
        ist = integrated_vars_pair(sp, sr, constants)
        rep = tracker.push(ist)
        du = state_velocity(sp, es.mu).values - state_velocity(sr, es.mu).values
        dv = sp.v.values - sr.v.values
        dw = sp.w.values - sr.w.values
        sup_v = float(np.max(np.abs(dv)))
        sup_u = float(np.max(np.abs(du)))
        l1 = (
            float(np.trapezoid(np.abs(dv), dx=grid.h)),
            float(np.trapezoid(np.abs(du), dx=grid.h)),
            float(np.trapezoid(np.abs(dw), dx=grid.h)),
        )
        rows.append((sp.t, *rep.E, *rep.D, rep.x_norm_sq, *l1, sup_v, sup_u,
                     float(np.min(sp.v.values))))
        sup_series.append(max(sup_v, sup_u))
    write_csv(out / "energy.csv", _energy_header(), rows)

    sup_arr = np.array(sup_series)
    # transient end: earliest recorded time from which the history is
    # nonincreasing all the way to T
    k_star = len(sup_arr) - 1
    for k in range(len(sup_arr) - 2, -1, -1):
        if sup_arr[k] >= sup_arr[k + 1] - 1e-12 - 1e-9 * sup_arr[k]:
            k_star = k
        else:
            break
    monotone = k_star <= (len(sup_arr) - 1) // 2
    xnorms = np.array([r[7] for r in rows])
    report = {
        "amplitude": amp,
        "gate_pass": gate.passed,
        "initial_sup": float(sup_arr[0]),
        "final_sup": float(sup_arr[-1]),
        "decay_ratio": float(sup_arr[-1] / sup_arr[0]) if sup_arr[0] > 0 else 0.0,
        "transient_end": float(traj_p.times[k_star]),
        "monotone_after_transient": monotone,
        "min_v_overall": min(traj_p.min_v_overall, traj_r.min_v_overall),
        "x_norm_initial": float(xnorms[0]),
        "x_norm_final": float(xnorms[-1]),
        "x_norm_growth": float(xnorms[-1] / xnorms[0]) if xnorms[0] > 0 else 1.0,
        "x_norm_nondecreasing": bool(np.all(np.diff(xnorms) >= -1e-15)),
    }
    write_json(out / "stability_report.json", report)
    _emit_meta(out, "stability", cfg)
    return EXIT_OK


def run_free_boundary(cfg):
    out = _out_dir("free-boundary", cfg)
    es = _end_states(cfg)
    if cfg["perturb_amplitude"] != 0.0:
        data = perturbed_traveling_wave_data(
            es, cfg["x_max"], cfg["n"], cfg["perturb_amplitude"],
            cfg["perturb_center"], cfg["perturb_width"],
        )
    else:
        data = traveling_wave_data(es, cfg["x_max"], cfg["n"])
    rep = validate_hypotheses(data)
    fcfg = FBConfig(T=cfg["t_final"], dt=cfg["dt"], picard_tol=cfg["picard_tol"],
                    picard_max=cfg["picard_max"])
    solution = picard_solve(data, fcfg)
    rows = identity_rows(solution)
    write_csv(
        out / "interface.csv",
        ["t", "x_tilde", "x_tilde_prime", "p_s", "res_EDO1", "res_BCw",
         "res_transport", "res_EDO2"],
        [tuple(r[k] for k in ("t", "x_tilde", "x_tilde_prime", "p_s", "res_EDO1",
                              "res_BCw", "res_transport", "res_EDO2")) for r in rows],
    )
    n_snap = max(2, cfg["snapshots"])
    idx = np.unique(np.linspace(0, len(solution.path.times) - 1, n_snap).astype(int))
    for k in idx:
        st = solution.state(int(k))
        _write_state(out, "fb_state", st.t, data.grid.x,
                     (st.v_s.values, st.u_s.values, st.w_s.values),
                     ["v_s", "u_s", "w_s"])
    checks = identity_checks(solution)
    _emit_meta(out, "free-boundary", cfg, {
        "status": solution.status,
        "iterations": solution.iterations,
        "picard_history": list(solution.picard_history),
        "T_effective": solution.T_effective,
        "interface_speed0": rep.interface_speed0,
        "h3_residual": rep.h3_residual,
        "identity": {
            "res_transport": checks.res_transport,
            "res_EDO1": checks.res_edo1,
            "res_EDO2": checks.res_edo2,
            "res_BCw": checks.res_bcw,
            "p_s_min": checks.p_s_min,
            "v_s_min": checks.v_s_min,
            "p_s_equiv": checks.p_s_equiv,
        },
    })
    if cfg["identity_tol"] > 0:
        worst = max(checks.res_transport, checks.res_edo1, checks.res_edo2, checks.res_bcw)
        if worst > cfg["identity_tol"] or not checks.complementarity_ok:
            print(f"identity residual {worst:.3e} exceeds {cfg['identity_tol']:.3e}",
                  file=sys.stderr)
            return EXIT_IDENTITY
    return EXIT_OK


_RUNNERS = {
    "profile": run_profile,
    "eps-profile": run_eps_profile,
    "converge": run_converge,
    "simulate": run_simulate,
    "stability": run_stability,
    "free-boundary": run_free_boundary,
}


def main(argv=None) -> int:
    try:
        scenario, cfg = parse_config(sys.argv[1:] if argv is None else argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _RUNNERS[scenario](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CongestedNSError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
