import math

import numpy as np
import pytest

from flexarm import build_model
from flexarm.dynamics import (Q_MAX, StateValidityError, SystemState, accelerations,
                              assemble, elastic_accel, energy, equilibrium, full_rhs,
                              inverse_dynamics, static_deflection, static_residual)
from flexarm.sim import SimConfig, integrate

from helpers import random_states
from lagrangian_oracle import LagrangianOracle


def test_mass_matrix_symmetric_positive_definite(coeffs):
    rng = np.random.default_rng(0)
    for y in random_states(rng, 1000):
        M = assemble(SystemState.from_vector(y), coeffs).mass_matrix()
        assert np.max(np.abs(M - M.T)) < 1e-14
        assert np.linalg.eigvalsh(M)[0] > 0


def test_accelerations_match_lagrangian_oracle(beam, coeffs):
    oracle = LagrangianOracle(beam)
    rng = np.random.default_rng(1)
    for y in random_states(rng, 100):
        u = rng.uniform(-5, 5, 3)
        qdd, Rdd = accelerations(SystemState.from_vector(y), u, coeffs)
        ref = oracle.accelerations(y[:4], y[4:], u)
        scale = max(1.0, np.max(np.abs(ref)))
        assert np.max(np.abs(np.concatenate(([qdd], Rdd)) - ref)) < 1e-8 * scale


def test_energy_matches_oracle(beam, coeffs):
    oracle = LagrangianOracle(beam)
    rng = np.random.default_rng(2)
    for y in random_states(rng, 20):
        E = energy(SystemState.from_vector(y), coeffs)[2]
        assert E == pytest.approx(oracle.energy(y[:4], y[4:]), rel=1e-10, abs=1e-10)


def test_energy_conserved_without_input(coeffs):
    y0 = SystemState(0.15, [0.3, 0.0, 0.0], 0.0, [0.2, 0.1, 0.0])
    ts = integrate(full_rhs(coeffs), y0, SimConfig(rtol=1e-11, atol=1e-12, t_end=5.0, dt_out=0.05))
    E = np.array([energy(SystemState.from_vector(y), coeffs)[2] for y in ts.states()])
    assert np.max(np.abs(E - E[0])) < 1e-6 * abs(E[0])


def test_validity_bound_enforced(coeffs):
    with pytest.raises(StateValidityError):
        accelerations(SystemState(Q_MAX, [0, 0, 0], 0, [0, 0, 0]), np.zeros(3), coeffs)


def test_static_deflection_reference(coeffs):
    assert float(static_deflection(0.0, coeffs)[0]) == pytest.approx(0.1250, rel=0.05)
    assert abs(float(static_deflection(-math.pi / 2, coeffs)[0])) < 1e-10


def test_static_residual_zero_on_grid(coeffs):
    th = np.linspace(-math.pi, math.pi, 41)
    q, dq = static_deflection(th, coeffs)
    assert np.max(np.abs(static_residual(th, q, coeffs))) < 1e-12
    h = 1e-6
    fd = (static_deflection(th + h, coeffs)[0] - static_deflection(th - h, coeffs)[0]) / (2 * h)
    assert np.allclose(dq, fd, atol=1e-7)


@pytest.mark.parametrize("theta", [-math.pi / 2, -0.7, 0.0, 0.4])
def test_equilibrium_is_at_rest(coeffs, theta):
    eq = equilibrium(theta, coeffs)
    assert eq.force_x == 0.0
    state = SystemState(eq.q, [theta, 0.0, 0.0], 0.0, np.zeros(3))
    qdd, Rdd = accelerations(state, eq.input, coeffs)
    assert abs(qdd) < 1e-12 and np.max(np.abs(Rdd)) < 1e-12


def test_inverse_dynamics_roundtrip(coeffs):
    rng = np.random.default_rng(3)
    for y in random_states(rng, 20):
        u = rng.uniform(-3, 3, 3)
        state = SystemState.from_vector(y)
        qdd, Rdd = accelerations(state, u, coeffs)
        assert elastic_accel(y[0], y[4], y[1:4], y[5:8], Rdd, coeffs) == pytest.approx(qdd, abs=1e-10)
        back = inverse_dynamics(y[0], y[4], qdd, y[1:4], y[5:8], Rdd, coeffs)
        assert np.allclose(back, u, atol=1e-10)


def test_linear_model_affine_in_q(beam):
    _, lin = build_model(beam.replace(model_kind="linear"))
    R, Rd, Rdd = np.array([0.3, 0.1, 0.0]), np.array([0.0, 0.0, 0.0]), np.array([0.5, -0.2, 0.1])
    qs = np.linspace(-0.3, 0.3, 7)
    acc = np.array([elastic_accel(q, 0.0, R, Rd, Rdd, lin) for q in qs])
    fit = np.polyval(np.polyfit(qs, acc, 1), qs)
    assert np.max(np.abs(acc - fit)) < 1e-6
