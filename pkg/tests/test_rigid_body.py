import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from attitude_vi import (
    AttitudeState,
    InertiaError,
    InertiaPair,
    exp_so3,
    hat,
    j_from_jd,
    jd_from_j,
    kinetic_energy,
    momentum_from_velocity,
    velocity_from_momentum,
)

from conftest import random_jd

J_TEST = np.diag([2.5, 2.0, 1.5])

moment = st.floats(min_value=0.1, max_value=2.0)
jd_eigs = st.tuples(moment, moment, moment)
component = st.floats(min_value=-10.0, max_value=10.0)
omega_st = st.tuples(component, component, component).map(np.array)
angle = st.floats(min_value=-3.0, max_value=3.0)
axis_st = st.tuples(angle, angle, angle).map(np.array)


def test_jd_from_j_isotropic():
    assert np.array_equal(jd_from_j(np.eye(3)), 0.5 * np.eye(3))


def test_jd_from_j_diag():
    assert np.allclose(jd_from_j(J_TEST), np.diag([0.5, 1.0, 1.5]), rtol=0, atol=1e-15)


def test_j_from_jd_cases():
    assert np.array_equal(j_from_jd(0.5 * np.eye(3)), np.eye(3))
    assert np.allclose(j_from_jd(np.diag([0.5, 1.0, 1.5])), J_TEST, rtol=0, atol=1e-15)
    assert np.array_equal(j_from_jd(np.zeros((3, 3))), np.zeros((3, 3)))


def test_zero_inertia_rejected_downstream():
    with pytest.raises(InertiaError):
        InertiaPair.from_jd(np.zeros((3, 3)))


def test_jd_from_j_rejects_nonsymmetric():
    J = J_TEST.copy()
    J[0, 1] = 1e-6
    with pytest.raises(InertiaError):
        jd_from_j(J)
    with pytest.raises(InertiaError):
        j_from_jd(J)


def test_jd_from_j_rejects_triangle_violation():
    with pytest.raises(InertiaError, match="triangle"):
        jd_from_j(np.diag([1.0, 1.0, 3.0]))


def test_triangle_equality_is_allowed():
    # A flat plate: l3 = l1 + l2, Jd has a zero eigenvalue.
    Jd = jd_from_j(np.diag([1.0, 2.0, 3.0]))
    assert np.linalg.eigvalsh(Jd).min() == pytest.approx(0.0, abs=1e-15)


def sym_from(eigs, axis):
    Q = exp_so3(axis)
    M = Q @ np.diag(eigs) @ Q.T
    return 0.5 * (M + M.T)


@given(jd_eigs, axis_st)
def test_roundtrip_j_jd(eigs, axis):
    J = j_from_jd(sym_from(eigs, axis))
    assert np.abs(j_from_jd(jd_from_j(J)) - J).max() <= 1e-13
    Jd = jd_from_j(J)
    assert np.abs(Jd - Jd.T).max() <= 1e-15


def test_kinetic_energy_examples():
    assert kinetic_energy(J_TEST, [0, 0, 0]) == 0.0
    assert kinetic_energy(J_TEST, [1, 0, 0]) == 1.25
    Jd = jd_from_j(J_TEST)
    W = hat([1.0, 0.0, 0.0])
    assert 0.5 * np.trace(W @ Jd @ W.T) == pytest.approx(1.25, rel=1e-15)


@given(omega_st, jd_eigs, axis_st)
def test_kinetic_energy_trace_form(omega, eigs, axis):
    pair = InertiaPair.from_jd(sym_from(eigs, axis))
    W = hat(omega)
    trace_form = 0.5 * np.trace(W @ pair.Jd @ W.T)
    vector_form = kinetic_energy(pair.J, omega)
    assert vector_form == pytest.approx(trace_form, rel=1e-12, abs=1e-300)
    if np.linalg.norm(omega) > 1e-100:  # below this the square underflows
        assert vector_form > 0


def test_momentum_velocity_examples():
    assert np.array_equal(momentum_from_velocity(J_TEST, [0, 0, 0]), np.zeros(3))
    assert np.array_equal(momentum_from_velocity(J_TEST, [0, 1, 0]), [0, 2, 0])
    assert np.array_equal(velocity_from_momentum(J_TEST, [0, 0, 0]), np.zeros(3))
    assert np.allclose(velocity_from_momentum(J_TEST, [0, 2, 0]), [0, 1, 0], atol=1e-15)


def test_momentum_velocity_roundtrip():
    rng = np.random.default_rng(3)
    for _ in range(200):
        pair = InertiaPair.from_jd(random_jd(rng))
        omega = rng.normal(size=3) * 5
        back = velocity_from_momentum(pair.J, momentum_from_velocity(pair.J, omega))
        assert np.abs(back - omega).max() <= 1e-12 * max(1.0, np.abs(omega).max())
        pi = rng.normal(size=3) * 5
        assert np.abs(pair.J @ velocity_from_momentum(pair.J, pi) - pi).max() <= 1e-12 * 5


def test_velocity_from_momentum_rejects_near_singular():
    with pytest.raises(InertiaError, match="near-singular"):
        velocity_from_momentum(np.diag([1.0, 1.0, 1e-13]), [1, 1, 1])


def test_inertia_pair_validates_consistency():
    pair = InertiaPair.from_principal([2.5, 2.0, 1.5])
    assert np.allclose(pair.Jd, np.diag([0.5, 1.0, 1.5]))
    with pytest.raises(InertiaError):
        InertiaPair(J_TEST, np.diag([0.5, 1.0, 1.4]))
    with pytest.raises(InertiaError):
        InertiaPair.from_principal([1.0, 1.0, 3.0])
    with pytest.raises(InertiaError):
        InertiaPair.from_principal([-1.0, -1.0, -1.0])


def test_inertia_pair_is_immutable():
    J = J_TEST.copy()
    pair = InertiaPair.from_j(J)
    with pytest.raises(ValueError):
        pair.J[0, 0] = 1.0
    J[0, 0] = 99.0  # caller's array stays independent
    assert pair.J[0, 0] == 2.5


def test_attitude_state_validation():
    state = AttitudeState(np.eye(3), [1, 2, 3], 0.5)
    assert np.array_equal(state.spatial_momentum, [1, 2, 3])
    with pytest.raises(ValueError, match="rotation"):
        AttitudeState(np.diag([1.0, 1.0, -1.0]), [0, 0, 0])
    bad = np.eye(3)
    bad[0, 1] = 1e-6
    with pytest.raises(ValueError):
        AttitudeState(bad, [0, 0, 0])


def test_attitude_state_from_velocity():
    pair = InertiaPair.from_principal([2.5, 2.0, 1.5])
    state = AttitudeState.from_velocity(np.eye(3), [1, 2, 3], pair)
    assert np.array_equal(state.Pi, [2.5, 4.0, 4.5])
