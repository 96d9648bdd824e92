import pytest

from congested_ns import EndStates, PressureLaw, eps_profile_solve


@pytest.fixture(scope="session")
def fig1_end_states():
    # v+ = 2, u- = 1, u+ = 0 gives s = 1 and congested pressure 1, the
    # normalization under which the singular fronts converge to the limit front
    return EndStates(v_plus=2.0, u_minus=1.0, u_plus=0.0, mu=1.0)


@pytest.fixture(scope="session")
def eps_profile_g1(fig1_end_states):
    return eps_profile_solve(PressureLaw(epsilon=1e-2, gamma=1.0), fig1_end_states)


@pytest.fixture(scope="session")
def eps_profile_g2(fig1_end_states):
    return eps_profile_solve(PressureLaw(epsilon=1e-2, gamma=2.0), fig1_end_states)
