"""Equations of motion of the one-mode flexible arm on a planar slider.

Generalized coordinates are ``(q, theta, X, Y)``: dimensionless tip
deflection amplitude, hub angle and slider position in units of the beam
length.  Time is dimensionless.  The equations take the block form::

    [M_ff  M_fr] [q'' ]   [N_f]   [0]
    [M_rf  M_rr] [R'' ] = [N_r] + [u]

All block functions broadcast over leading array dimensions so that a swarm
of trajectories can be integrated as one vector field.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ModelCoefficients

Q_MAX = 0.45


class StateValidityError(ArithmeticError):
    """The state left the region where the truncated model is trusted."""


@dataclass
class SystemState:
    q: float
    R: np.ndarray
    qdot: float
    Rdot: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.R = np.asarray(self.R, dtype=float).reshape(3)
        self.Rdot = np.asarray(self.Rdot, dtype=float).reshape(3)

    @classmethod
    def from_vector(cls, y, t=0.0) -> "SystemState":
        y = np.asarray(y, dtype=float)
        return cls(y[0], y[1:4], y[4], y[5:8], t)

    def to_vector(self) -> np.ndarray:
        return np.concatenate(([self.q], self.R, [self.qdot], self.Rdot))

    def check(self, q_max: float = Q_MAX):
        if not abs(self.q) < q_max:
            raise StateValidityError(f"|q|={abs(self.q):.4g} outside validity bound {q_max}")


@dataclass
class AssembledDynamics:
    M_ff: float
    M_fr: np.ndarray
    M_rr: np.ndarray
    N_f: float
    N_r: np.ndarray

    @property
    def M_rf(self) -> np.ndarray:
        return self.M_fr

    def mass_matrix(self) -> np.ndarray:
        M = np.empty((4, 4))
        M[0, 0] = self.M_ff
        M[0, 1:] = self.M_fr
        M[1:, 0] = self.M_fr
        M[1:, 1:] = self.M_rr
        return M

    def forces(self) -> np.ndarray:
        return np.concatenate(([self.N_f], self.N_r))


@dataclass(frozen=True)
class Equilibrium:
    theta: float
    q: float
    torque: float
    force_x: float
    force_y: float

    @property
    def input(self) -> np.ndarray:
        return np.array([self.torque, self.force_x, self.force_y])


# ---------------------------------------------------------------------------
# blocks

def mass_ff(q, c: ModelCoefficients):
    q2 = q * q
    return c.c8 + 4 * c.c6 * q2 + c.lam2 * (c.phi_l ** 2 + 4 * c.c1_l ** 2 * q2)


def mass_fr(q, th, c: ModelCoefficients):
    """Elastic/rigid coupling row, shape (3, ...)."""
    q2 = q * q
    s, co = np.sin(th), np.cos(th)
    kap = c.c5 + c.lam2 * c.phi_l
    gam = c.c4 + c.lam2 * c.c1_l
    m1 = (0.5 * c.c9 + 0.5 * c.c10 * q2 + c.lam2 * c.phi_l * (1 + c.c1_l * q2)
          + c.lam6 * kap)
    m2 = -kap * s - 2 * gam * q * co
    m3 = kap * co - 2 * gam * q * s
    return np.array([m1 + 0 * th, m2, m3])


def mass_rr(q, th, c: ModelCoefficients):
    """Rigid block, shape (3, 3, ...)."""
    q2 = q * q
    s, co = np.sin(th), np.cos(th)
    l2, l6 = c.lam2, c.lam6
    kap = c.c5 + l2 * c.phi_l
    m11 = (1.0 / 3.0 + l6 + l6 ** 2 + c.lam3
           + c.c6 * q2 * q2 + (c.c8 - c.c7 - 2 * l6 * c.c4 - c.c12_eff) * q2
           + l2 * ((1 + l6) ** 2 + (c.phi_l ** 2 - 2 * c.c1_l * (1 + l6)) * q2
                   + c.c1_l ** 2 * q2 * q2))
    m12 = (-0.5 - l6 * (1 + l2) + c.c4 * q2 + l2 * (c.c1_l * q2 - 1)) * s - kap * q * co
    m13 = (0.5 + l6 * (1 + l2) - c.c4 * q2 + l2 * (1 - c.c1_l * q2)) * co - kap * q * s
    m22 = (1 + c.lam1 + l2) + 0 * m11
    zero = 0 * m11
    return np.array([[m11, m12, m13], [m12, m22, zero], [m13, zero, m22]])


def force_f(q, th, qd, thd, c: ModelCoefficients):
    q2 = q * q
    s, co = np.sin(th), np.cos(th)
    l2 = c.lam2
    w2 = thd * thd
    nf = (-c.c2 * q + (2 * c.c6 * w2 - 2 * c.c3) * q2 * q - 4 * c.c6 * q * qd * qd
          + (c.c8 - c.c7 - c.c12_eff) * q * w2
          - l2 * (4 * c.c1_l ** 2 * q * qd * qd - c.phi_l ** 2 * q * w2
                  - 2 * c.c1_l ** 2 * q2 * q * w2 + 2 * c.c1_l * q * w2)
          - c.lam6 * 2 * w2 * q * (c.c4 + l2 * c.c1_l)
          + c.lam4 * (2 * c.c4 * q * s - c.c5 * co
                      + l2 * (2 * c.c1_l * q * s - c.phi_l * co))
          - 2 * c.lam5 ** 2 * c.c11 * q2 * q)
    if c.damping:
        nf = nf - 2 * c.damping * qd
    return nf


def force_r(q, th, qd, thd, c: ModelCoefficients):
    """Rigid generalized forces, shape (3, ...)."""
    q2 = q * q
    s, co = np.sin(th), np.cos(th)
    l2, l6 = c.lam2, c.lam6
    w2 = thd * thd
    qq = q * qd * thd
    n1 = (-4 * c.c6 * q2 * qq + 2 * (c.c7 - c.c8) * qq - c.c10 * q * qd * qd
          + 2 * c.c12_eff * qq + l6 * 4 * qq * (c.c4 + l2 * c.c1_l)
          + c.lam4 * ((c.c4 * q2 - 0.5) * co + c.c5 * q * s
                      + l2 * (c.phi_l * q * s + (c.c1_l * q2 - 1) * co))
          + l2 * ((4 * c.c1_l - 2 * c.phi_l ** 2) * qq
                  - 2 * c.c1_l * c.phi_l * q * qd * qd - 4 * c.c1_l ** 2 * q2 * qq))
    along = 0.5 * w2 + 2 * c.c4 * qd * qd - c.c4 * q2 * w2 + 2 * c.c5 * qd * thd
    across = c.c5 * q * w2 + 4 * c.c4 * qq
    tip_along = w2 + 2 * c.c1_l * qd * qd - c.c1_l * q2 * w2 + 2 * c.phi_l * qd * thd
    tip_across = c.phi_l * q * w2 + 4 * c.c1_l * qq
    hub = l6 * w2 * (1 + l2)
    n2 = along * co - across * s + hub * co + l2 * (tip_along * co - tip_across * s)
    n3 = (along * s + across * co + l2 * (tip_along * s + tip_across * co)
          - c.lam4 * (1 + c.lam1 + l2 + c.hub_mass_group) + hub * s)
    return np.array([n1, n2, n3])


# ---------------------------------------------------------------------------
# operations

def assemble(state: SystemState, coeffs: ModelCoefficients,
             q_max: float = Q_MAX) -> AssembledDynamics:
    state.check(q_max)
    q, th = state.q, state.R[0]
    qd, thd = state.qdot, state.Rdot[0]
    return AssembledDynamics(
        M_ff=float(mass_ff(q, coeffs)),
        M_fr=mass_fr(q, th, coeffs).astype(float),
        M_rr=mass_rr(q, th, coeffs).astype(float),
        N_f=float(force_f(q, th, qd, thd, coeffs)),
        N_r=force_r(q, th, qd, thd, coeffs).astype(float),
    )


def accelerations(state: SystemState, u, coeffs: ModelCoefficients,
                  q_max: float = Q_MAX, max_cond: float = 1e12):
    """Solve the 4x4 system for (q'', R'')."""
    dyn = assemble(state, coeffs, q_max)
    M = dyn.mass_matrix()
    cond = np.linalg.cond(M)
    if not cond < max_cond:
        raise StateValidityError(f"mass matrix ill-conditioned (cond={cond:.3g})")
    rhs = dyn.forces()
    rhs[1:] += np.asarray(u, dtype=float)
    acc = np.linalg.solve(M, rhs)
    return acc[0], acc[1:]


def elastic_accel(q, qd, R_d, Rd_dot, Rd_ddot, coeffs: ModelCoefficients):
    """Elastic acceleration with the rigid coordinates prescribed.

    ``R_d``, ``Rd_dot``, ``Rd_ddot`` have shape (3, ...); the result
    broadcasts like ``q``.
    """
    th, thd = R_d[0], Rd_dot[0]
    mff = mass_ff(q, coeffs)
    if np.any(mff <= 0):
        raise StateValidityError("non-positive elastic mass")
    mfr = mass_fr(q, th, coeffs)
    nf = force_f(q, th, qd, thd, coeffs)
    coupling = mfr[0] * Rd_ddot[0] + mfr[1] * Rd_ddot[1] + mfr[2] * Rd_ddot[2]
    return (nf - coupling) / mff


def inverse_dynamics(q, qd, qdd, R_d, Rd_dot, Rd_ddot, coeffs):
    """Input realizing the prescribed rigid acceleration (rigid rows)."""
    th = R_d[0]
    mfr = mass_fr(q, th, coeffs)
    mrr = mass_rr(q, th, coeffs)
    nr = force_r(q, th, qd, Rd_dot[0], coeffs)
    return mfr * qdd + np.einsum("ij...,j...->i...", mrr, Rd_ddot) - nr


# ---------------------------------------------------------------------------
# statics

def _static_terms(theta, c: ModelCoefficients):
    s, co = np.sin(theta), np.cos(theta)
    a3 = -2.0 * (c.c3 + c.lam5 ** 2 * c.c11)
    a1 = -c.c2 + 2 * c.lam4 * (c.c4 + c.lam2 * c.c1_l) * s
    a0 = -c.lam4 * (c.c5 + c.lam2 * c.phi_l) * co
    return a3, a1, a0


def _smallest_real_root(a3, a1, a0):
    """Smallest-magnitude real root of a3 q^3 + a1 q + a0 (scalars)."""
    if a3 == 0.0:
        if a1 == 0.0:
            raise ArithmeticError("degenerate static equation")
        return -a0 / a1
    p, r = a1 / a3, a0 / a3
    if p > 0:
        k = 2.0 * np.sqrt(p / 3.0)
        return -k * np.sinh(np.arcsinh(1.5 * r / p * np.sqrt(3.0 / p)) / 3.0)
    roots = np.roots([a3, 0.0, a1, a0])
    real = roots[np.abs(roots.imag) <= 1e-9 * max(1.0, np.max(np.abs(roots)))].real
    if real.size == 0:
        raise ArithmeticError("static equation has no real root")
    return real[np.argmin(np.abs(real))]


def static_deflection(theta, coeffs: ModelCoefficients):
    """Static deflection and its slope d q_bar / d theta.

    Vectorized over ``theta``.
    """
    theta = np.asarray(theta, dtype=float)
    a3, a1, a0 = _static_terms(theta, coeffs)
    flat = np.broadcast_arrays(a3, a1, a0)
    q = np.array([_smallest_real_root(x3, x1, x0)
                  for x3, x1, x0 in zip(*(f.ravel() for f in flat))]).reshape(theta.shape)
    for _ in range(2):
        q = q - (a3 * q ** 3 + a1 * q + a0) / (3 * a3 * q * q + a1)
    c = coeffs
    f_th = (2 * c.lam4 * (c.c4 + c.lam2 * c.c1_l) * q * np.cos(theta)
            + c.lam4 * (c.c5 + c.lam2 * c.phi_l) * np.sin(theta))
    f_q = 3 * a3 * q * q + a1
    return q, -f_th / f_q


def static_residual(theta, q, coeffs):
    a3, a1, a0 = _static_terms(theta, coeffs)
    return a3 * q ** 3 + a1 * q + a0


def equilibrium(theta: float, coeffs: ModelCoefficients) -> Equilibrium:
    """Rest configuration at hub angle ``theta`` and the input holding it."""
    c = coeffs
    q = float(static_deflection(theta, c)[0])
    s, co = np.sin(theta), np.cos(theta)
    q2 = q * q
    torque = -c.lam4 * ((c.c4 * q2 - 0.5) * co + c.c5 * q * s
                        + c.lam2 * (c.phi_l * q * s + (c.c1_l * q2 - 1) * co))
    force_y = c.lam4 * (1 + c.lam1 + c.lam2 + c.hub_mass_group)
    return Equilibrium(theta=float(theta), q=q, torque=float(torque),
                       force_x=0.0, force_y=float(force_y))


# ---------------------------------------------------------------------------
# energy

def potential_energy(q, th, Y, c: ModelCoefficients):
    q2 = q * q
    s, co = np.sin(th), np.cos(th)
    elastic = 0.5 * c.c2 * q2 + 0.5 * (c.c3 + c.lam5 ** 2 * c.c11) * q2 * q2
    gravity = c.lam4 * ((0.5 - c.c4 * q2) * s + c.c5 * q * co
                        + c.lam2 * ((1 - c.c1_l * q2) * s + c.phi_l * q * co)
                        + (1 + c.lam1 + c.lam2 + c.hub_mass_group) * Y)
    return elastic + gravity


def energy(state: SystemState, coeffs: ModelCoefficients, q_max: float = Q_MAX):
    """(T, U, E) with E conserved by the unforced, undamped motion.

    T is the velocity quadratic form of the Lagrangian.  When the
    centrifugal potential is switched on it is velocity dependent, and it
    sits inside T as -0.5 c12 q^2 theta'^2 rather than in U; that is the
    sign under which T + U is the conserved Hamiltonian.
    """
    dyn = assemble(state, coeffs, q_max)
    v = np.concatenate(([state.qdot], state.Rdot))
    T = 0.5 * v @ dyn.mass_matrix() @ v
    U = float(potential_energy(state.q, state.R[0], state.R[2], coeffs))
    return float(T), U, float(T + U)


def full_rhs(coeffs: ModelCoefficients, control=None, q_max: float = Q_MAX):
    """First-order vector field of the full model.

    ``control(t, y)`` returns the 3-vector input; ``None`` means u = 0.
    """
    zero = np.zeros(3)

    def rhs(t, y):
        state = SystemState.from_vector(y, t)
        u = zero if control is None else control(t, y)
        qdd, Rdd = accelerations(state, u, coeffs, q_max)
        return np.concatenate((y[4:8], [qdd], Rdd))

    return rhs
