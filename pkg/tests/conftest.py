import time

import numpy as np
import pytest

from attitude_vi import (
    AttitudeState,
    InertiaPair,
    TorqueSchedule,
    exp_so3,
    propagate,
    propagate_rk4,
)

TUMBLING_J = (2.5, 2.0, 1.5)
TUMBLING_OMEGA = (1.0, 2.0, 3.0)

# Filled by tests/test_acceptance.py, printed at the end of the session.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_jd(rng, low=0.1, high=2.0):
    """Random positive definite Jd = Q diag(d) Q^T (any such Jd is physical)."""
    Q = exp_so3(rng.uniform(-np.pi, np.pi, 3))
    return Q @ np.diag(rng.uniform(low, high, 3)) @ Q.T


def random_rotation(rng):
    return exp_so3(rng.normal(size=3) * 1.5)


@pytest.fixture(scope="session")
def tumbling():
    pair = InertiaPair.from_principal(TUMBLING_J)
    state = AttitudeState.from_velocity(np.eye(3), TUMBLING_OMEGA, pair)
    return pair, state


@pytest.fixture(scope="session")
def long_vi_run(tumbling):
    """10^5 steps at h = 0.01, torque free, with its wall time."""
    pair, state = tumbling
    propagate(state, TorqueSchedule.zero(), 0.01, 10, pair)  # compile/load kernels
    start = time.perf_counter()
    traj = propagate(state, TorqueSchedule.zero(), 0.01, 100_000, pair)
    return traj, time.perf_counter() - start


@pytest.fixture(scope="session")
def long_rk4_run(tumbling):
    pair, state = tumbling
    return propagate_rk4(state, TorqueSchedule.zero(), 0.01, 100_000, pair)


@pytest.fixture(scope="session")
def rk4_reference_1s(tumbling):
    """Fine RK4 reference over 1 s at h = 1e-6 (final state only)."""
    pair, state = tumbling
    traj = propagate_rk4(state, TorqueSchedule.zero(), 1e-6, 1_000_000, pair,
                         decimation=1_000_000)
    return traj.R[-1], traj.Pi[-1]
