"""Sliding-mode tracking of the rigid coordinates with an elastic term.

The rigid accelerations are written as ``R'' = F + B u`` by eliminating the
elastic acceleration from the equations of motion.  The surface

    S = E' + K E + Gamma (q' + gamma4 (q - q_bar))

augments the tracking error ``E = R - R_d`` with the elastic deviation, and
the control drives ``S' = -A tanh(S)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp

from .dynamics import (Q_MAX, StateValidityError, SystemState, accelerations,
                       assemble, elastic_accel, static_deflection)
from .model import ModelCoefficients
from .sim import (SimConfig, TimeSeries, energy_columns, integrate, prescribed_rhs,
                  simulate_prescribed)

HALF_PI = 0.5 * np.pi

#: Coefficient fields scaled by the parametric uncertainty: mass, inertia
#: and gravity groups plus the stiffness constants.  Geometry (the hub
#: radius ratio and the mode-shape integrals of inertia type) is held fixed.
PERTURBED_FIELDS = ("lam1", "lam2", "lam3", "lam4", "c2", "c3")


class SynthesisError(ArithmeticError):
    pass


def _vec3(x, name):
    x = np.broadcast_to(np.asarray(x, dtype=float), (3,)).copy()
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} must be finite")
    return x


@dataclass
class SmcGains:
    """Surface and reaching gains.

    The defaults keep the dynamics on the surface stable: with the elastic
    coupling of this arm, a tracking gain larger than ``gamma4`` makes the
    elastic mode negatively damped while ``S = 0`` is held.  The margin
    ``psi`` is sized so that the synthesized reaching term dominates a 10 %
    parametric perturbation outside a boundary layer of 0.05.
    """

    k: np.ndarray = field(default_factory=lambda: np.full(3, 2.0))
    gamma: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.5, 0.5]))
    gamma4: float = 8.0
    A: np.ndarray | None = None
    psi: np.ndarray = field(default_factory=lambda: np.full(3, 100.0))

    def __post_init__(self):
        self.k = _vec3(self.k, "k")
        self.gamma = _vec3(self.gamma, "gamma")
        self.psi = _vec3(self.psi, "psi")
        if np.any(self.k <= 0) or not self.gamma4 > 0 or np.any(self.psi <= 0):
            raise ValueError("k, gamma4 and psi must be positive")
        if self.A is not None:
            self.A = _vec3(self.A, "A")
            if np.any(self.A <= 0):
                raise ValueError("reaching gains A must be positive")

    def with_reaching(self, A) -> "SmcGains":
        return replace(self, A=np.asarray(A, dtype=float))


@dataclass
class UncertaintyModel:
    eta: np.ndarray = field(default_factory=lambda: np.zeros(3))
    D: np.ndarray = field(default_factory=lambda: np.full((3, 3), 0.1))
    eps: float = 0.0
    omega: float = 20.0  # rad/s of physical time

    def __post_init__(self):
        self.eta = _vec3(self.eta, "eta")
        self.D = np.asarray(self.D, dtype=float).reshape(3, 3)
        if np.any(self.eta < 0) or np.any(self.D < 0):
            raise ValueError("eta and D must be non-negative")
        if np.max(self.D.sum(axis=1)) > 1.0:
            raise ValueError("D must satisfy ||D||_inf <= 1")
        if not 0.0 <= self.eps <= 0.2:
            raise ValueError("eps must lie in [0, 0.2]")


@dataclass(frozen=True)
class RigidDynamics:
    F: np.ndarray
    B: np.ndarray
    B_inv: np.ndarray


def rigid_dynamics(state: SystemState, coeffs: ModelCoefficients,
                   q_max: float = Q_MAX) -> RigidDynamics:
    """Drift ``F`` and input map ``B`` of the rigid coordinates."""
    dyn = assemble(state, coeffs, q_max)
    schur = dyn.M_rr - np.outer(dyn.M_fr, dyn.M_fr) / dyn.M_ff
    if np.linalg.cond(schur) > 1e12:
        raise StateValidityError("singular rigid-coordinate mass matrix")
    B = np.linalg.inv(schur)
    F = B @ (dyn.N_r - dyn.N_f / dyn.M_ff * dyn.M_fr)
    return RigidDynamics(F=F, B=B, B_inv=schur)


def sliding_surface(state: SystemState, R_d, Rd_dot, q_bar, gains: SmcGains,
                    qdot_ref: float = 0.0) -> np.ndarray:
    """``S = E' + K E + Gamma ((q' - qdot_ref) + gamma4 (q - q_bar))``.

    With the default ``qdot_ref = 0`` and a static ``q_bar`` this is the
    plain augmented surface; passing a planned elastic path and its rate
    measures the elastic deviation from that path instead.
    """
    E = state.R - np.asarray(R_d, dtype=float)
    Ed = state.Rdot - np.asarray(Rd_dot, dtype=float)
    elastic = (state.qdot - qdot_ref) + gains.gamma4 * (state.q - q_bar)
    return Ed + gains.k * E + gains.gamma * elastic


def control_law(state: SystemState, desired, q_bar, gains: SmcGains,
                coeffs: ModelCoefficients, q_bar_dot: float = 0.0,
                qdot_ref: float = 0.0, qddot_ref: float = 0.0,
                include_qddot: bool = False, q_max: float = Q_MAX) -> np.ndarray:
    """Input driving the nominal surface dynamics to ``S' = -A tanh(S)``.

    ``desired`` is ``(R_d, R_d', R_d'')``; ``q_bar_dot`` is the rate of the
    elastic reference and ``qdot_ref``, ``qddot_ref`` the velocity reference
    of the surface and its rate (see :func:`sliding_surface`).  By default
    the elastic acceleration is left out of the feedback and treated as a
    disturbance.  With ``include_qddot`` it is eliminated exactly through
    the nominal elastic equation, which couples it to the commanded rigid
    acceleration, so a small 3x3 system is solved instead.
    """
    if gains.A is None:
        raise ValueError("reaching gains A are not set; run synthesis first")
    R_d, Rd_dot, Rd_ddot = (np.asarray(x, dtype=float) for x in desired)
    rd = rigid_dynamics(state, coeffs, q_max)
    S = sliding_surface(state, R_d, Rd_dot, q_bar, gains, qdot_ref)
    Ed = state.Rdot - Rd_dot
    elastic = gains.gamma4 * (state.qdot - q_bar_dot) - qddot_ref
    v = Rd_ddot - gains.k * Ed - gains.gamma * elastic - gains.A * np.tanh(S)
    if not include_qddot:
        return rd.B_inv @ (v - rd.F)
    dyn = assemble(state, coeffs, q_max)
    # q'' = (N_f - M_fr . R'') / M_ff, substituted into R'' + Gamma q'' = v
    lhs = np.eye(3) - np.outer(gains.gamma, dyn.M_fr) / dyn.M_ff
    Rdd = np.linalg.solve(lhs, v - gains.gamma * dyn.N_f / dyn.M_ff)
    return rd.B_inv @ (Rdd - rd.F)


# ---------------------------------------------------------------------------
# gain synthesis

def gain_system(D, psi, eta, b):
    """Matrix and right-hand side of the reaching-gain equations.

    Row i reads ``(pi/2) [A_i - sum_j D_ij A_j] = psi_i + eta_i + sum_j D_ij b_j``:
    the reaching term must beat the force uncertainty, the input-map
    uncertainty acting on the nominal command and on the other reaching
    terms, plus a margin.
    """
    D = np.asarray(D, dtype=float)
    M = HALF_PI * (np.eye(3) - D)
    rhs = np.asarray(psi, float) + np.asarray(eta, float) + D @ np.asarray(b, float)
    return M, rhs


def synthesize_gains(unc: UncertaintyModel, psi, b, coupled: bool = True) -> np.ndarray:
    """Reaching gains ``A`` from the uncertainty bounds.

    The coupled system has a unique non-negative solution when the
    spectral radius of ``D`` is below one (Perron-Frobenius); the
    ``coupled=False`` fallback divides each row by ``(pi/2)(1 - ||D||_inf)``.
    """
    D = unc.D
    row_sum = D.sum(axis=1)
    if np.any(row_sum > 1.0):
        raise SynthesisError(f"row sums of D exceed 1: {row_sum}")
    rho = np.max(np.abs(np.linalg.eigvals(D)))
    if coupled:
        if not rho < 1.0:
            raise SynthesisError(f"spectral radius of D is {rho:.6g} >= 1; shrink D")
        M, rhs = gain_system(D, psi, unc.eta, b)
        A = np.linalg.solve(M, rhs)
    else:
        norm = np.max(row_sum)
        if not norm < 1.0:
            raise SynthesisError("||D||_inf must be below 1 for the decoupled bound")
        _, rhs = gain_system(D, psi, unc.eta, b)
        A = rhs / (HALF_PI * (1.0 - norm))
    if np.any(~(A > 0)):
        raise SynthesisError(f"non-positive reaching gain(s) {A}; shrink D or eta")
    return A


def perturb(coeffs: ModelCoefficients, factor: float) -> ModelCoefficients:
    return coeffs.replace(**{f: getattr(coeffs, f) * factor for f in PERTURBED_FIELDS})


def inject_uncertainty(coeffs: ModelCoefficients, eps: float, omega: float, t: float,
                       time_scale: float = 1.0) -> ModelCoefficients:
    """Plant coefficients at dimensionless time ``t``.

    Every perturbed parameter becomes ``p (1 + eps sin(omega t_phys))`` with
    ``t_phys = t / time_scale`` in seconds.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if eps == 0.0:
        return coeffs
    return perturb(coeffs, 1.0 + eps * np.sin(omega * t / time_scale))


# ---------------------------------------------------------------------------
# elastic reference, bounds and closed loop

REFERENCE_MODES = ("planned", "tracking", "final")


class ElasticReference:
    """What the elastic term of the surface is measured against.

    ``planned``
        the elastic response of the plan itself (prescribed rigid motion
        from the static deflection at the start).  On the plan the surface
        and the tracking error vanish together.
    ``tracking``
        the static deflection at the current desired angle.
    ``final``
        the static deflection at the goal angle.

    Calling the reference returns ``(q_ref, q_ref', v_ref, v_ref')`` where
    ``v_ref`` is the velocity subtracted from q' in the surface (zero for
    the static modes).
    """

    def __init__(self, plan, coeffs: ModelCoefficients, mode: str = "planned",
                 horizon: float | None = None):
        if mode not in REFERENCE_MODES:
            raise ValueError(f"elastic reference mode must be one of {REFERENCE_MODES}")
        self.plan, self.coeffs, self.mode = plan, coeffs, mode
        self._sol = None
        self._horizon = 0.0
        if mode == "planned":
            self._extend(horizon or 3.0 * plan.T_f)

    def _extend(self, horizon):
        q0 = float(static_deflection(float(np.ravel(self.plan(0.0)[0][0])[0]),
                                     self.coeffs)[0])
        sol = solve_ivp(prescribed_rhs(self.plan, self.coeffs), (0.0, horizon), [q0, 0.0],
                        method="RK45", rtol=1e-10, atol=1e-12, dense_output=True)
        if sol.status < 0:
            raise StateValidityError(f"planned elastic response failed: {sol.message}")
        self._sol, self._horizon = sol.sol, horizon

    def __call__(self, t):
        if self.mode == "planned":
            if t > self._horizon:
                self._extend(max(t, 2.0 * self._horizon))
            q, qd = self._sol(t)
            R, Rd, Rdd = self.plan(t)
            qdd = float(elastic_accel(q, qd, R, Rd, Rdd, self.coeffs))
            return float(q), float(qd), float(qd), qdd
        if self.mode == "final":
            t = self.plan.T_f
        R, Rd, _ = self.plan(t)
        q, slope = static_deflection(float(np.ravel(R[0])[0]), self.coeffs)
        rate = 0.0 if self.mode == "final" else float(slope) * float(np.ravel(Rd[0])[0])
        return float(q), rate, 0.0, 0.0


def estimate_bounds(plan, coeffs: ModelCoefficients, gains: SmcGains, samples: int = 200,
                    safety: float = 1.5, sweep: float = 0.1, reference: str = "planned"):
    """Sampled worst-case ``b`` (with a safety factor) and ``eta``.

    The plan is sampled at ``samples`` points over ``[0, 1.5 T_f]`` with the
    elastic coordinate following the prescribed-motion response.  ``b_j``
    bounds |R_dj'' - F_j - gamma_j (q'' - v_ref' + gamma4 (q' - q_ref'))| and
    ``eta_j`` bounds |F_j(perturbed) - F_j| over a +-``sweep`` scaling of
    the perturbed parameters.
    """
    ref = ElasticReference(plan, coeffs, reference)
    T_end = 1.5 * plan.T_f
    ts = simulate_prescribed(plan, coeffs, SimConfig(t_end=T_end, dt_out=T_end / (samples - 1)))
    R, Rd, Rdd = plan(ts.t)
    qdd = elastic_accel(ts["q"], ts["qdot"], R, Rd, Rdd, coeffs)
    variants = [perturb(coeffs, 1 - sweep), perturb(coeffs, 1 + sweep)]
    b = np.zeros(3)
    eta = np.zeros(3)
    for i, t in enumerate(ts.t):
        state = SystemState(ts["q"][i], R[:, i], ts["qdot"][i], Rd[:, i], t)
        F = rigid_dynamics(state, coeffs).F
        _, q_ref_dot, _, v_ref_dot = ref(t)
        elastic = qdd[i] - v_ref_dot + gains.gamma4 * (ts["qdot"][i] - q_ref_dot)
        b = np.maximum(b, np.abs(Rdd[:, i] - F - gains.gamma * elastic))
        for cv in variants:
            eta = np.maximum(eta, np.abs(rigid_dynamics(state, cv).F - F))
    return safety * b, eta


@dataclass
class ClosedLoop:
    """Closed-loop plant and controller sharing one time base."""

    plan: object
    coeffs: ModelCoefficients
    gains: SmcGains
    uncertainty: UncertaintyModel | None = None
    time_scale: float = 1.0
    include_qddot: bool = False
    reference: str = "planned"
    q_max: float = Q_MAX

    def __post_init__(self):
        self._ref = ElasticReference(self.plan, self.coeffs, self.reference)

    def plant(self, t) -> ModelCoefficients:
        u = self.uncertainty
        if u is None or u.eps == 0.0:
            return self.coeffs
        return inject_uncertainty(self.coeffs, u.eps, u.omega, t, self.time_scale)

    def control(self, t, y) -> np.ndarray:
        state = SystemState.from_vector(y, t)
        q_ref, q_ref_dot, v_ref, v_ref_dot = self._ref(t)
        return control_law(state, self.plan(t), q_ref, self.gains, self.coeffs,
                           q_bar_dot=q_ref_dot, qdot_ref=v_ref, qddot_ref=v_ref_dot,
                           include_qddot=self.include_qddot, q_max=self.q_max)

    def rhs(self, t, y):
        u = self.control(t, y)
        qdd, Rdd = accelerations(SystemState.from_vector(y, t), u, self.plant(t), self.q_max)
        return np.concatenate((y[4:8], [qdd], Rdd))

    def initial_state(self) -> SystemState:
        R, _, _ = self.plan(0.0)
        theta = float(np.ravel(R[0])[0])
        q0 = float(static_deflection(theta, self.coeffs)[0])
        return SystemState(q0, np.ravel(R).astype(float), 0.0, np.zeros(3), 0.0)

    def simulate(self, cfg: SimConfig, initial: SystemState | None = None) -> TimeSeries:
        """Closed-loop run with input, surface and surface-rate columns.

        ``Sdot`` is measured from the plant accelerations at each sample and
        ``e`` is the tracking error ``R - R_d``.
        """
        initial = initial or self.initial_state()
        if self.reference == "planned":
            self._ref._extend(initial.t + cfg.t_end)
        ts = integrate(self.rhs, initial, cfg)
        n = len(ts)
        u, S, Sd, e = (np.empty((n, 3)) for _ in range(4))
        g = self.gains
        for i, (t, y) in enumerate(zip(ts.t, ts.states())):
            state = SystemState.from_vector(y, t)
            R_d, Rd_dot, Rd_ddot = self.plan(t)
            q_ref, q_ref_dot, v_ref, v_ref_dot = self._ref(t)
            u[i] = self.control(t, y)
            qdd, Rdd = accelerations(state, u[i], self.plant(t), self.q_max)
            S[i] = sliding_surface(state, R_d, Rd_dot, q_ref, g, v_ref)
            e[i] = state.R - R_d
            Sd[i] = (Rdd - Rd_ddot + g.k * (state.Rdot - Rd_dot)
                     + g.gamma * (qdd - v_ref_dot + g.gamma4 * (state.qdot - q_ref_dot)))
        cols = {}
        for name, arr in (("u", u), ("S", S), ("Sdot", Sd), ("e", e)):
            cols.update({f"{name}{j + 1}": arr[:, j] for j in range(3)})
        ts = ts.add(**cols)
        return ts.add(**energy_columns(ts, self.coeffs, self.q_max))


def design_controller(plan, coeffs: ModelCoefficients, gains: SmcGains | None = None,
                      D=None, samples: int = 200, safety: float = 1.5, sweep: float = 0.1,
                      coupled: bool = True, reference: str = "planned"):
    """Estimate bounds on the plan and synthesize the reaching gains."""
    gains = gains or SmcGains()
    b, eta = estimate_bounds(plan, coeffs, gains, samples, safety, sweep, reference)
    unc = UncertaintyModel(eta=eta, D=np.full((3, 3), 0.1) if D is None else D)
    A = synthesize_gains(unc, gains.psi, b, coupled)
    return gains.with_reaching(A), unc, b
