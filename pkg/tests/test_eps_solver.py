import numpy as np
import pytest

from congested_ns import (
    EndStates,
    EpsState,
    Grid1D,
    GridFunction,
    NewtonError,
    PerturbationError,
    PerturbationSpec,
    PressureLaw,
    SolverConfig,
    build_initial,
    eps_profile_solve,
    simulate,
    state_velocity,
    step,
)
from congested_ns.grid import _d1_array


@pytest.fixture(scope="module")
def smooth_profile(fig1_end_states):
    # eps = 0.3 keeps the front layer wide enough to resolve on coarse grids
    return eps_profile_solve(PressureLaw(0.3, 1.0), fig1_end_states)


class TestPerturbation:
    def test_zero_amplitude_reproduces_profile(self, eps_profile_g1):
        grid = Grid1D(-20.0, 20.0, 401)
        st = build_initial(eps_profile_g1, PerturbationSpec(amplitude=0.0), grid)
        assert np.array_equal(st.v.values, eps_profile_g1.v(grid.x))
        assert np.array_equal(st.w.values, eps_profile_g1.w(grid.x))

    def test_dipole_zero_mass(self, eps_profile_g1):
        grid = Grid1D(-20.0, 20.0, 801)
        spec = PerturbationSpec(shape="dipole", amplitude=1e-3, center=3.0, width=0.5)
        dv = spec.profile(grid.x)
        assert abs(np.trapezoid(dv, dx=grid.h)) < 1e-15

    def test_overlarge_amplitude_rejected_at_exact_threshold(self, smooth_profile):
        grid = Grid1D(-20.0, 20.0, 1601)
        center, width = -10.0, 0.5
        # dipole extremum is amplitude*sqrt(2)/width*exp(-1/2); the profile is
        # at its minimum v_minus in the congested zone, so the critical
        # amplitude is (v_min - 1) * width * exp(1/2) / sqrt(2)
        v_min = float(np.min(smooth_profile.v(grid.x)))
        a_crit = (v_min - 1.0) * width * np.exp(0.5) / np.sqrt(2.0)
        with pytest.raises(PerturbationError, match="node"):
            build_initial(
                smooth_profile,
                PerturbationSpec(amplitude=1.05 * a_crit, center=center, width=width),
                grid,
            )
        st = build_initial(
            smooth_profile,
            PerturbationSpec(amplitude=0.95 * a_crit, center=center, width=width),
            grid,
        )
        assert np.min(st.v.values) > 1.0

    def test_support_outside_grid_rejected(self, eps_profile_g1):
        grid = Grid1D(-20.0, 20.0, 401)
        with pytest.raises(PerturbationError, match="support"):
            build_initial(
                eps_profile_g1,
                PerturbationSpec(amplitude=1e-3, center=19.0, width=1.0),
                grid,
            )

    def test_unknown_shape_rejected(self):
        with pytest.raises(ValueError):
            PerturbationSpec(shape="square", amplitude=1.0)


class TestStep:
    def test_constant_state_is_equilibrium(self, eps_profile_g1):
        grid = Grid1D(0.0, 10.0, 101)
        law = eps_profile_g1.law
        st = EpsState(
            t=0.0,
            v=GridFunction(grid, np.full(grid.n, 2.0)),
            w=GridFunction(grid, np.zeros(grid.n)),
            law=law,
        )
        cfg = SolverConfig(dt=1e-2, cfl_guard=False)
        for _ in range(5):
            st = step(st, cfg, eps_profile_g1)
        assert np.max(np.abs(st.v.values - 2.0)) < 1e-13
        assert np.max(np.abs(st.w.values)) < 1e-13

    def test_cfl_guard_clamps_dt(self, eps_profile_g1):
        grid = Grid1D(-20.0, 20.0, 801)
        st = build_initial(eps_profile_g1, PerturbationSpec(amplitude=0.0), grid)
        cfg = SolverConfig(dt=0.5, cfl_guard=True)
        out = step(st, cfg, eps_profile_g1)
        assert out.t < 0.01

    def test_oversized_step_fails_loudly(self, eps_profile_g1):
        grid = Grid1D(-20.0, 20.0, 801)
        st = build_initial(
            eps_profile_g1,
            PerturbationSpec(amplitude=1e-2, center=3.0, width=0.8),
            grid,
        )
        cfg = SolverConfig(dt=10.0 * grid.h / eps_profile_g1.speed_eps, cfl_guard=False)
        with pytest.raises(NewtonError):
            for _ in range(60):
                st = step(st, cfg, eps_profile_g1)

    def test_v_constraint_enforced_on_construction(self, eps_profile_g1):
        grid = Grid1D(0.0, 1.0, 11)
        vals = np.full(grid.n, 1.5)
        vals[4] = 0.99
        with pytest.raises(Exception, match="node 4"):
            EpsState(
                t=0.0,
                v=GridFunction(grid, vals),
                w=GridFunction(grid, np.zeros(grid.n)),
                law=eps_profile_g1.law,
            )


class TestSimulate:
    def test_traveling_wave_oracle_and_refinement(self, eps_profile_g1):
        prof = eps_profile_g1
        errs = []
        for n, dt in ((801, 2e-3), (1601, 1e-3)):
            grid = Grid1D(-20.0, 20.0, n)
            init = build_initial(prof, PerturbationSpec(amplitude=0.0), grid)
            cfg = SolverConfig(dt=dt, cfl_guard=False)
            traj = simulate(init, 0.5, cfg, prof, stride=10**9)
            st = traj.final_state
            errs.append(
                float(np.max(np.abs(st.v.values - prof.v(grid.x - prof.speed_eps * st.t))))
            )
            assert traj.min_v_overall > 1.0
        assert errs[0] < 6e-3
        assert errs[0] / errs[1] >= 3.0

    def test_deviation_mass_conserved(self, smooth_profile):
        prof = smooth_profile
        grid = Grid1D(-20.0, 20.0, 801)
        init = build_initial(
            prof, PerturbationSpec(amplitude=1e-3, center=3.0, width=0.8), grid
        )
        cfg = SolverConfig(dt=2e-3, cfl_guard=False)
        traj = simulate(init, 0.5, cfg, prof, stride=10**9)

        def dev_mass(state):
            dv = state.v.values - prof.v(grid.x - prof.speed_eps * state.t)
            return float(np.trapezoid(dv, dx=grid.h))

        assert abs(dev_mass(traj.final_state) - dev_mass(traj.states[0])) < 1e-10

    def test_momentum_form_recovered(self, smooth_profile):
        # substituting u = w + mu d_x ln v turns the volume update into the
        # plain mass equation; its discrete residual shrinks at O(h^2 + dt)
        prof = smooth_profile
        res = []
        for n, dt in ((801, 2e-3), (1601, 1e-3)):
            grid = Grid1D(-20.0, 20.0, n)
            init = build_initial(
                prof, PerturbationSpec(amplitude=1e-2, center=3.0, width=0.8), grid
            )
            cfg = SolverConfig(dt=dt, cfl_guard=False)
            traj = simulate(init, 0.2, cfg, prof, stride=25)
            s1, s2 = traj.states[-2], traj.states[-1]
            u1 = state_velocity(s1, 1.0).values
            u2 = state_velocity(s2, 1.0).values
            R = (s2.v.values - s1.v.values) / (s2.t - s1.t) - 0.5 * (
                _d1_array(u1, grid.h) + _d1_array(u2, grid.h)
            )
            res.append(float(np.max(np.abs(R[2:-2]))))
        assert res[0] < 2e-3
        assert res[0] / res[1] >= 2.5

    def test_step_failure_carries_time_stamp(self, eps_profile_g1):
        grid = Grid1D(-20.0, 20.0, 801)
        init = build_initial(
            eps_profile_g1, PerturbationSpec(amplitude=1e-2, center=3.0, width=0.8), grid
        )
        cfg = SolverConfig(dt=10.0 * grid.h, cfl_guard=False)
        with pytest.raises(NewtonError, match="t = "):
            simulate(init, 1.0, cfg, eps_profile_g1)
