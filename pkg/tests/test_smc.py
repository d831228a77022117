import math

import numpy as np
import pytest

from flexarm.dynamics import SystemState, accelerations, assemble
from flexarm.sim import SimConfig
from flexarm.smc import (HALF_PI, ClosedLoop, ElasticReference, SmcGains, SynthesisError,
                         UncertaintyModel, control_law, gain_system, inject_uncertainty,
                         rigid_dynamics, sliding_surface, synthesize_gains)

from helpers import random_states


def test_rigid_dynamics_reproduce_accelerations(coeffs):
    rng = np.random.default_rng(7)
    for y in random_states(rng, 100):
        u = rng.uniform(-4, 4, 3)
        state = SystemState.from_vector(y)
        rd = rigid_dynamics(state, coeffs)
        _, Rdd = accelerations(state, u, coeffs)
        assert np.allclose(rd.F + rd.B @ u, Rdd, atol=1e-9 * max(1, np.max(np.abs(Rdd))))
        assert np.allclose(rd.B @ rd.B_inv, np.eye(3), atol=1e-9)


def test_input_map_symmetric_positive(coeffs):
    state = SystemState(0.0, [0.4, 0.1, 0.0], 0.0, np.zeros(3))
    B = rigid_dynamics(state, coeffs).B
    assert np.allclose(B, B.T, atol=1e-12)
    assert np.all(np.linalg.eigvalsh(0.5 * (B + B.T)) > 0)


def test_surface_cases():
    g = SmcGains(k=[1.0, 2.0, 3.0], gamma=[1.0, 0.5, 0.5], gamma4=2.0)
    on_plan = SystemState(0.1, [0.2, 0.3, 0.0], 0.0, [0.5, 0.0, 0.0])
    S = sliding_surface(on_plan, [0.2, 0.3, 0.0], [0.5, 0.0, 0.0], 0.1, g)
    assert np.array_equal(S, np.zeros(3))
    off = SystemState(0.1, [0.3, 0.3, 0.0], 0.0, [0.5, 0.0, 0.0])
    S = sliding_surface(off, [0.2, 0.3, 0.0], [0.5, 0.0, 0.0], 0.1, g)
    assert np.allclose(S, [0.1, 0.0, 0.0])
    bent = SystemState(0.2, [0.2, 0.3, 0.0], 0.05, [0.5, 0.0, 0.0])
    S = sliding_surface(bent, [0.2, 0.3, 0.0], [0.5, 0.0, 0.0], 0.1, g)
    assert np.allclose(S, g.gamma * (0.05 + 2.0 * 0.1))


def test_control_needs_reaching_gains(coeffs):
    state = SystemState(0.0, np.zeros(3), 0.0, np.zeros(3))
    with pytest.raises(ValueError):
        control_law(state, (np.zeros(3),) * 3, 0.0, SmcGains(), coeffs)


def test_control_with_qddot_gives_exact_surface_rate(coeffs):
    """S' = -A tanh(S) at any state when the elastic acceleration is kept."""
    rng = np.random.default_rng(8)
    g = SmcGains().with_reaching([5.0, 6.0, 7.0])
    for y in random_states(rng, 20, q_max=0.3):
        state = SystemState.from_vector(y)
        desired = tuple(rng.normal(size=(3, 3)))
        u = control_law(state, desired, 0.05, g, coeffs, include_qddot=True)
        qdd, Rdd = accelerations(state, u, coeffs)
        S = sliding_surface(state, desired[0], desired[1], 0.05, g)
        Sdot = Rdd - desired[2] + g.k * (state.Rdot - desired[1]) + g.gamma * (qdd + g.gamma4 * state.qdot)
        assert np.allclose(Sdot, -g.A * np.tanh(S), atol=1e-9)


def test_synthesis_decoupled_closed_form():
    psi, eta = np.array([1.0, 2.0, 3.0]), np.array([0.5, 0.25, 0.0])
    A = synthesize_gains(UncertaintyModel(eta=eta, D=np.zeros((3, 3))), psi, np.ones(3))
    assert np.array_equal(A, (psi + eta) / (math.pi / 2))


def test_synthesis_coupled_residual():
    D = np.array([[0.1, 0.2, 0.05], [0.0, 0.3, 0.1], [0.2, 0.2, 0.2]])
    unc = UncertaintyModel(eta=[1.0, 2.0, 0.5], D=D)
    psi, b = np.array([3.0, 1.0, 2.0]), np.array([10.0, 4.0, 7.0])
    A = synthesize_gains(unc, psi, b)
    M, rhs = gain_system(D, psi, unc.eta, b)
    assert np.max(np.abs(M @ A - rhs)) < 1e-12
    # the same equations written out row by row
    for i in range(3):
        lhs = HALF_PI * (A[i] - D[i] @ A)
        assert lhs == pytest.approx(psi[i] + unc.eta[i] + D[i] @ b, rel=1e-13)


def test_synthesis_rejects_infeasible_D():
    with pytest.raises(ValueError):
        UncertaintyModel(D=np.full((3, 3), 0.5))
    unc = UncertaintyModel(D=np.full((3, 3), 0.1))
    unc.D = np.full((3, 3), 1.0 / 3.0)  # spectral radius exactly 1
    with pytest.raises(SynthesisError):
        synthesize_gains(unc, np.ones(3), np.ones(3))


def test_injection_factor(coeffs):
    perturbed = inject_uncertainty(coeffs, 0.1, 20.0, math.pi / 40, time_scale=1.0)
    for name in ("lam1", "lam2", "lam3", "lam4", "c2", "c3"):
        assert getattr(perturbed, name) == pytest.approx(1.1 * getattr(coeffs, name), rel=1e-14)
    assert perturbed.c8 == coeffs.c8
    assert inject_uncertainty(coeffs, 0.0, 20.0, 1.0) is coeffs


def test_uncertainty_validation():
    with pytest.raises(ValueError):
        UncertaintyModel(eps=0.5)


def test_planned_reference_starts_static(coeffs, task):
    plan = task.cycloid_plan()
    ref = ElasticReference(plan, coeffs)
    q, qd, v, vd = ref(0.0)
    assert abs(q) < 1e-12 and qd == 0.0
    final = ElasticReference(plan, coeffs, "final")(0.0)
    assert final[0] == pytest.approx(0.1255, abs=1e-3)


def test_closed_loop_perfect_model_reaches_surface(coeffs, task):
    """Started off the plan, the surface decays as S' = -A tanh(S)."""
    plan = task.cycloid_plan()
    gains = SmcGains().with_reaching([2.0, 2.0, 2.0])
    loop = ClosedLoop(plan, coeffs, gains, include_qddot=True)
    start = loop.initial_state()
    start.R = start.R + np.array([0.05, 0.02, 0.0])
    ts = loop.simulate(SimConfig(rtol=1e-10, atol=1e-12, t_end=1.0, dt_out=0.05), start)
    S = np.column_stack([ts[f"S{j}"] for j in (1, 2, 3)])
    Sd = np.column_stack([ts[f"Sdot{j}"] for j in (1, 2, 3)])
    assert np.allclose(Sd, -gains.A * np.tanh(S), atol=1e-8)
    assert np.all(np.abs(S[-1]) <= np.abs(S[0]) + 1e-10)
    assert np.max(np.abs(S[-1])) < 0.2 * np.max(np.abs(S[0]))
