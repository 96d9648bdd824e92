import numpy as np
import pytest

from congested_ns import (
    EndStates,
    InvalidEndStatesError,
    LimitProfile,
    NotConnectableError,
    PressureLaw,
    SpanTooSmallError,
    ZoneParams,
    eps_profile_solve,
    eps_speed,
    eps_speed_printed,
    limit_profile_eval,
    limit_speed,
    three_zone_diagnostics,
    transition_corrector_solve,
)


class TestLimitProfile:
    def test_speed_examples(self):
        assert limit_speed(EndStates(2.0, 1.0, 0.0)) == pytest.approx(1.0, rel=1e-15)
        assert limit_speed(EndStates(3.0, 1.0, 0.0)) == pytest.approx(0.5, rel=1e-15)

    def test_entropy_violation(self):
        with pytest.raises(InvalidEndStatesError):
            EndStates(2.0, 0.0, 1.0)
        with pytest.raises(InvalidEndStatesError):
            EndStates(0.9, 1.0, 0.0)

    def test_values_at_interface(self, fig1_end_states):
        prof = LimitProfile.from_end_states(fig1_end_states)
        v, u, w, p = limit_profile_eval(prof, 0.0)
        assert v == pytest.approx(1.0, abs=1e-15)
        assert u == pytest.approx(1.0, abs=1e-15)
        assert w == pytest.approx(0.0, abs=1e-15)    # right limit u_plus
        assert p == pytest.approx(1.0, abs=1e-15)    # left value s^2 (v_plus - 1)

    def test_value_at_one(self, fig1_end_states):
        prof = LimitProfile.from_end_states(fig1_end_states)
        v, u, _, p = limit_profile_eval(prof, 1.0)
        assert v == pytest.approx(2.0 / (1.0 + np.exp(-2.0)), rel=1e-14)
        assert u == pytest.approx(2.0 - 2.0 / (1.0 + np.exp(-2.0)), rel=1e-13)
        assert p == 0.0

    def test_congested_zone_constant(self, fig1_end_states):
        prof = LimitProfile.from_end_states(fig1_end_states)
        v, u, w, p = limit_profile_eval(prof, -5.0)
        assert (v, u, w, p) == (1.0, 1.0, 1.0, 1.0)

    def test_logistic_ode_residual_fd_order(self, fig1_end_states):
        prof = LimitProfile.from_end_states(fig1_end_states)
        x = np.linspace(0.2, 6.0, 37)
        errs = []
        for h in (1e-2, 5e-3, 2.5e-3):
            fd = (prof.v(x + h) - prof.v(x - h)) / (2.0 * h)
            errs.append(np.max(np.abs(fd - prof.dv(x))))
        orders = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
        assert min(orders) >= 1.9
        # analytic residual of the logistic relation is round-off
        assert np.max(np.abs(prof.dv(x) - (prof.speed / fig1_end_states.mu)
                             * prof.v(x) * (2.0 - prof.v(x)))) < 1e-14

    def test_flux_continuity_at_interface(self):
        es = EndStates(3.0, 1.0, 0.0, mu=2.0)
        prof = LimitProfile.from_end_states(es)
        assert -es.mu * prof.du(0.0) == pytest.approx(prof.p_minus, rel=1e-14)

    def test_effective_velocity_step_identity(self, fig1_end_states):
        es = fig1_end_states
        prof = LimitProfile.from_end_states(es)
        x = np.linspace(1e-8, 20.0, 400)
        w_alg = prof.u(x) - es.mu * prof.dv(x) / prof.v(x)
        assert np.max(np.abs(w_alg - es.u_plus)) < 1e-12
        assert np.max(np.abs(prof.w(x) - es.u_plus)) == 0.0
        assert np.max(np.abs(prof.w(-x) - es.u_minus)) == 0.0


class TestEpsSpeed:
    def test_exact_value(self, fig1_end_states):
        law = PressureLaw(1e-2, 1.0)
        assert eps_speed(law, fig1_end_states) == pytest.approx(1.0, abs=1e-15)
        assert eps_speed_printed(law, fig1_end_states) == pytest.approx(
            np.sqrt(0.99), rel=1e-15
        )

    def test_limit_approach_monotone(self, fig1_end_states):
        target = 1.0  # sqrt(1/(v_plus-1))
        gaps = []
        for eps in (1e-2, 1e-4, 1e-6, 1e-8):
            gaps.append(abs(eps_speed(PressureLaw(eps, 2.0), fig1_end_states) - target))
        assert all(a >= b for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] < 1e-4
        # for gamma = 1, v+ = 2 the speed is identically 1
        for eps in (1e-2, 1e-5, 1e-8):
            assert abs(eps_speed(PressureLaw(eps, 1.0), fig1_end_states) - 1.0) < 1e-15

    def test_not_connectable(self):
        es = EndStates(1.5, 1.0, 0.0)
        with pytest.raises(NotConnectableError):
            eps_speed(PressureLaw(2.0, 1.0), es)


class TestEpsProfile:
    def test_normalization_exact(self, eps_profile_g1, eps_profile_g2):
        assert eps_profile_g1.v(0.0) == pytest.approx(1.1, abs=1e-14)
        assert eps_profile_g2.v(0.0) == pytest.approx(
            1.0 + 1e-2 ** (1.0 / 3.0), abs=1e-14
        )

    def test_end_states_are_equilibria(self, eps_profile_g1):
        prof = eps_profile_g1
        assert prof.rhs(prof.end_states.v_plus) == pytest.approx(0.0, abs=1e-15)
        assert prof.rhs(prof.v_minus_eps) == pytest.approx(0.0, abs=1e-12)

    def test_cross_route_residual(self, eps_profile_g1, eps_profile_g2):
        assert eps_profile_g1.residual_max < 1e-8
        assert eps_profile_g2.residual_max < 1e-8

    def test_monotone_and_confined(self, eps_profile_g1):
        prof = eps_profile_g1
        assert np.all(np.diff(prof.v_nodes) > 0)
        assert np.all(np.diff(prof.x_nodes) > 0)
        assert prof.v_nodes[0] > prof.v_minus_eps
        assert prof.v_nodes[-1] < prof.end_states.v_plus
        assert np.all(prof.rhs(prof.v_nodes) > 0)

    def test_far_field_at_span_edges(self, eps_profile_g1):
        prof = eps_profile_g1
        assert abs(prof.v(prof.x_span[0]) - prof.v_minus_eps) < 1e-8
        assert abs(prof.v(prof.x_span[1]) - prof.end_states.v_plus) < 1e-8

    def test_span_too_small(self, fig1_end_states):
        with pytest.raises(SpanTooSmallError):
            eps_profile_solve(
                PressureLaw(1e-2, 1.0), fig1_end_states, x_span=(-1.0, 2.0)
            )

    def test_derived_fields(self, eps_profile_g1):
        prof = eps_profile_g1
        es = prof.end_states
        # far fields of u and w
        assert prof.u(prof.x_span[0]) == pytest.approx(es.u_minus, abs=1e-8)
        assert prof.u(prof.x_span[1]) == pytest.approx(prof.u_plus_eps, abs=1e-8)
        assert prof.w(prof.x_span[0]) == pytest.approx(es.u_minus, abs=1e-6)
        assert prof.w(prof.x_span[1]) == pytest.approx(prof.u_plus_eps, abs=1e-8)

    def test_uniform_derivative_bound(self, fig1_end_states):
        sups = []
        for eps in (1e-2, 1e-3, 1e-4, 1e-5):
            prof = eps_profile_solve(PressureLaw(eps, 1.0), fig1_end_states)
            sups.append(float(np.max(prof.rhs(prof.v_nodes))))
        assert max(sups) <= sups[0] * 1.10

    def test_local_uniform_convergence(self, fig1_end_states):
        lim = LimitProfile.from_end_states(fig1_end_states)
        for R in (1.0, 5.0):
            xg = np.linspace(-R, R, 801)
            sups = []
            for eps in (1e-2, 1e-3, 1e-4):
                prof = eps_profile_solve(PressureLaw(eps, 1.0), fig1_end_states)
                sups.append(float(np.max(np.abs(prof.v(xg) - lim.v(xg)))))
            assert sups[0] > sups[1] > sups[2]
            assert sups[-1] < 2e-2


class TestTransitionCorrector:
    def test_initial_value_and_slope(self):
        corr = transition_corrector_solve(1.0, 1.0, 1.0, x_corr=50.0)
        assert corr(0.0)[0] == pytest.approx(2.0, abs=1e-12)
        assert corr.derivative(0.0)[0] == pytest.approx(0.5, rel=1e-10)

    def test_strictly_increasing_and_asymptote(self):
        corr = transition_corrector_solve(2.0, 1.0, 1.0, x_corr=300.0)
        xi = np.linspace(-10.0, 300.0, 2000)
        vals = corr(xi)
        assert np.all(np.diff(vals) >= 0)
        assert np.all(np.diff(vals[xi > 0]) > 0)
        # deviation from the linear asymptote settles to a constant
        d1 = corr(200.0)[0] - 200.0
        d2 = corr(300.0)[0] - 300.0
        assert abs(d1 - d2) < 1e-2
        assert abs(d1) < 5.0

    def test_ode_residual(self):
        corr = transition_corrector_solve(1.0, 1.0, 1.0, x_corr=40.0)
        xi = np.linspace(-5.0, 35.0, 101)
        hd = 1e-5
        fd = (corr(xi + hd) - corr(xi - hd)) / (2.0 * hd)
        assert np.max(np.abs(fd - corr.derivative(xi))) < 1e-7


class TestThreeZone:
    def test_x_min_shrinks_and_x_star_shrinks(self, fig1_end_states):
        lim = LimitProfile.from_end_states(fig1_end_states)
        xmins, xstars, terrs = [], [], []
        for eps in (1e-2, 1e-3, 1e-4):
            prof = eps_profile_solve(PressureLaw(eps, 1.0), fig1_end_states)
            rep = three_zone_diagnostics(prof, lim)
            assert not rep.degenerate
            xmins.append(rep.x_min)
            xstars.append(abs(rep.x_star))
            terrs.append(rep.transition_err)
        assert xmins[0] > xmins[1] > xmins[2] > 0
        assert xstars[0] > xstars[1] > xstars[2] > 0
        assert max(terrs) <= 2.0 * terrs[0] + 1e-12

    def test_sup_error_matches_shift_normalization(self, eps_profile_g1, fig1_end_states):
        # the free-zone sup error is attained at x = 0 where it equals
        # eps^(1/(gamma+1)) by the shift normalization
        lim = LimitProfile.from_end_states(fig1_end_states)
        rep = three_zone_diagnostics(eps_profile_g1, lim)
        assert rep.sup_err_free == pytest.approx(0.1, rel=1e-2)

    def test_degenerate_report(self, fig1_end_states):
        prof = eps_profile_solve(PressureLaw(0.6, 1.0), fig1_end_states)
        lim = LimitProfile.from_end_states(fig1_end_states)
        rep = three_zone_diagnostics(prof, lim, ZoneParams(threshold_k=1.3))
        assert rep.degenerate
        assert np.isnan(rep.x_min)
