"""Independent equations of motion built straight from the energies.

Kinetic and potential energy are integrated over the beam by Gauss-Legendre
quadrature of the position/velocity field of every material point, using
the inextensible axial displacement and second-order curvature.  The mass
matrix comes from polarization of the velocity quadratic form and all
configuration derivatives from complex-step differentiation, so nothing is
shared with the closed-form blocks in ``flexarm.dynamics`` except the
physical parameters.
"""
import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq

H = 1e-30


class LagrangianOracle:
    def __init__(self, beam, nodes=64):
        l, rho, ei = beam.length, beam.linear_density, beam.flexural_rigidity
        self.lam1 = beam.slider_mass / (rho * l)
        self.lam2 = beam.tip_mass / (rho * l)
        self.lam3 = beam.hub_inertia / (rho * l ** 3)
        self.lam4 = rho * beam.gravity * l ** 3 / ei
        self.lam5 = beam.slenderness
        self.lam6 = beam.hub_radius / l
        self.linear = beam.model_kind == "linear"
        self.centrifugal = beam.centrifugal

        alpha = self.lam2
        f = lambda b: (1 + np.cos(b) * np.cosh(b)
                       + alpha * b * (np.cos(b) * np.sinh(b) - np.cosh(b) * np.sin(b)))
        b = brentq(f, 0.3, 1.9 if alpha > 0 else 1.9, xtol=1e-15)
        sig = (np.cos(b) + np.cosh(b)) / (np.sin(b) + np.sinh(b))
        self.phi = lambda x: np.cos(b * x) - np.cosh(b * x) - sig * (np.sin(b * x) - np.sinh(b * x))
        self.dphi = lambda x: b * (-np.sin(b * x) - np.sinh(b * x) - sig * (np.cos(b * x) - np.cosh(b * x)))
        self.d2phi = lambda x: b * b * (-np.cos(b * x) - np.cosh(b * x) + sig * (np.sin(b * x) + np.sinh(b * x)))

        x, w = leggauss(nodes)
        self.xi = 0.5 * (x + 1)
        self.w = 0.5 * w
        # axial shortening function c1(xi) = 0.5 int_0^xi phi'^2
        self.c1 = np.array([0.5 * np.sum(0.5 * xj * w * self.dphi(0.5 * xj * (x + 1)) ** 2)
                            for xj in np.append(self.xi, 1.0)])
        if self.linear:
            self.c1[:] = 0.0

    def _fields(self, q, th, qd, thd, Xd, Yd):
        xi = np.append(self.xi, 1.0)  # last entry: the tip
        u = -q * q * self.c1
        v = q * self.phi(xi)
        ud = -2 * q * qd * self.c1
        vd = qd * self.phi(xi)
        a = thd * (self.lam6 + xi + u) + vd
        bb = ud - thd * v
        vx = Xd - a * np.sin(th) + bb * np.cos(th)
        vy = Yd + bb * np.sin(th) + a * np.cos(th)
        return xi, u, v, vx, vy

    def quadratic(self, x, v):
        """Velocity-quadratic part of the Lagrangian (T minus centrifugal term)."""
        q, th, X, Y = x
        qd, thd, Xd, Yd = v
        xi, u, vv, vx, vy = self._fields(q, th, qd, thd, Xd, Yd)
        sp = vx * vx + vy * vy
        T = (0.5 * np.sum(self.w * sp[:-1]) + 0.5 * self.lam3 * thd ** 2
             + 0.5 * self.lam2 * sp[-1] + 0.5 * self.lam1 * (Xd ** 2 + Yd ** 2))
        x_ = self.xi
        F = thd ** 2 * (self.lam6 * (1 - x_) + 0.5 * (1 - x_ * x_))
        if not self.centrifugal:
            return T
        Uc = 0.5 * np.sum(self.w * F * (q * self.dphi(x_)) ** 2)
        return T - Uc

    def potential(self, x):
        q, th, X, Y = x
        x_ = self.xi
        vp = q * self.dphi(x_)
        vpp = q * self.d2phi(x_)
        bend = 0.5 * np.sum(self.w * (vpp ** 2 + (0.0 if self.linear else vpp ** 2 * vp ** 2)))
        up = -0.5 * vp ** 2
        axial = 0.5 * self.lam5 ** 2 * np.sum(self.w * up ** 2)
        u = -q * q * self.c1
        v = q * self.phi(np.append(x_, 1.0))
        grav = self.lam4 * np.sum(self.w * ((x_ + u[:-1]) * np.sin(th) + v[:-1] * np.cos(th) + Y))
        grav += self.lam4 * self.lam2 * ((1 + u[-1]) * np.sin(th) + v[-1] * np.cos(th) + Y)
        hub_mass = 2 * self.lam3 / self.lam6 ** 2
        grav += self.lam4 * (self.lam1 + hub_mass) * Y
        return bend + axial + grav

    def mass_matrix(self, x):
        E = np.eye(4)
        L2 = lambda v: self.quadratic(x, v)
        diag = [L2(E[i]) for i in range(4)]
        M = np.empty((4, 4), dtype=complex if np.iscomplexobj(x) else float)
        for i in range(4):
            M[i, i] = 2 * diag[i]
            for j in range(i + 1, 4):
                M[i, j] = M[j, i] = L2(E[i] + E[j]) - diag[i] - diag[j]
        return M

    def forces(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        dL = np.empty(4)
        for k in range(4):
            xc = x.astype(complex)
            xc[k] += 1j * H
            dL[k] = (self.quadratic(xc, v) - self.potential(xc)).imag / H
        Mdot_v = (self.mass_matrix(x + 1j * H * v) @ v).imag / H
        return dL - Mdot_v

    def energy(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        return v @ self.mass_matrix(x) @ v / 2 + self.potential(x)

    def accelerations(self, x, v, u):
        M = self.mass_matrix(np.asarray(x, dtype=float))
        rhs = self.forces(x, v)
        rhs[1:] += u
        return np.linalg.solve(M, rhs)
