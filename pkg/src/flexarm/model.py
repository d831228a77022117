"""Beam parameters, first clamped-mass mode shape and the spatial constants.

Everything here works on the normalized abscissa ``xi = s / l`` in [0, 1].
Mode-shape derivatives are taken with respect to ``xi``, which makes the
integrals below directly equal to the dimensionless constants used by the
equations of motion (``c2_tilde = l**3 * c2`` and so on).
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate, optimize

ModelKind = Literal["nonlinear", "linear"]

#: Reference constants printed next to the physical parameter set of the
#: shipped configuration (l = 2 m, EI = 14.58, rho = 0.27, m = 0.05, ...).
REFERENCE_CONSTANTS = {
    "phi_l": -1.78,
    "c1_l": 1.85,
    "c2": 9.66,
    "c3": 13.23,
    "c4": 0.61,
    "c5": -0.68,
    "c6": 0.71,
    "c7": 0.93,
    "c8": 0.77,
    "c9": -1.00,
    "c10": -1.48,
}
REFERENCE_OMEGA = 24.4  # rad/s, reported "first natural frequency"
REFERENCE_QBAR = 0.1250  # static tip deflection at theta = 0


class ModelError(ValueError):
    """Raised for invalid beam parameters or failed numerical set-up."""


class RootIsolationError(ModelError):
    pass


class QuadratureError(ModelError):
    pass


@dataclass(frozen=True)
class BeamConfig:
    """Physical parameters of arm, hub, slider and tip mass (SI units).

    ``slenderness`` is l/k with k the radius of gyration of the cross
    section; it multiplies the axial-strain quartic term.  The default 0
    is the strictly inextensible limit.

    ``centrifugal`` adds the rotating-beam potential 0.5 int F v'^2 to the
    Lagrangian.  The inextensible kinetic energy already carries the
    rotational stiffening, and with the extra term the mass matrix turns
    indefinite for |q| above roughly 0.13, so it is off by default.
    """

    length: float
    flexural_rigidity: float
    linear_density: float
    tip_mass: float = 0.0
    slider_mass: float = 0.0
    hub_inertia: float = 0.0
    hub_radius: float = 0.1
    gravity: float = 0.0
    slenderness: float = 0.0
    model_kind: ModelKind = "nonlinear"
    centrifugal: bool = False

    def __post_init__(self):
        for name in ("length", "flexural_rigidity", "linear_density"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ModelError(f"{name} must be positive, got {value!r}")
        for name in ("tip_mass", "slider_mass", "hub_inertia", "hub_radius",
                     "slenderness"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ModelError(f"{name} must be non-negative, got {value!r}")
        if not math.isfinite(self.gravity):
            raise ModelError("gravity must be finite")
        if self.gravity != 0 and self.hub_radius <= 0:
            raise ModelError("hub_radius must be positive when gravity is on")
        if self.model_kind not in ("nonlinear", "linear"):
            raise ModelError(f"unknown model_kind {self.model_kind!r}")

    @property
    def mass_ratio(self) -> float:
        """Tip mass over beam mass, m / (rho l)."""
        return self.tip_mass / (self.linear_density * self.length)

    @property
    def time_scale(self) -> float:
        """Factor converting seconds to dimensionless time, sqrt(EI / rho l^4)."""
        return math.sqrt(self.flexural_rigidity
                         / (self.linear_density * self.length ** 4))

    def replace(self, **changes) -> "BeamConfig":
        return dataclasses.replace(self, **changes)


def reference_beam(**overrides) -> BeamConfig:
    """The physical set used for the reference simulations."""
    params = dict(length=2.0, flexural_rigidity=14.58, linear_density=0.27,
                  tip_mass=0.05, slider_mass=0.5, hub_inertia=5e-3,
                  hub_radius=0.1, gravity=10.0, slenderness=0.0)
    params.update(overrides)
    return BeamConfig(**params)


# ---------------------------------------------------------------------------
# frequency equation

def frequency_residual(beta_l, alpha):
    """Left-hand side of the clamped/tip-mass frequency equation."""
    b = np.asarray(beta_l, dtype=float)
    return (1.0 + np.cos(b) * np.cosh(b)
            + alpha * b * (np.cos(b) * np.sinh(b) - np.cosh(b) * np.sin(b)))


def _residual_scale(b, alpha):
    return (1.0 + abs(math.cos(b) * math.cosh(b))
            + alpha * b * (abs(math.cos(b) * math.sinh(b))
                           + abs(math.cosh(b) * math.sin(b))))


def solve_frequency_equation(alpha: float, upper: float = 4.0,
                             n_scan: int = 4000) -> float:
    """Smallest positive root beta_1 * l of the frequency equation.

    The interval (0, upper] is scanned for the first sign change, then the
    bracket is refined with Brent's method.
    """
    if not (math.isfinite(alpha) and alpha >= 0):
        raise ModelError(f"mass ratio must be >= 0, got {alpha!r}")
    grid = np.linspace(upper / n_scan, upper, n_scan)
    vals = frequency_residual(grid, alpha)
    sign_change = np.nonzero(np.signbit(vals[1:]) != np.signbit(vals[:-1]))[0]
    if sign_change.size == 0:
        raise RootIsolationError(
            f"no sign change of the frequency equation in (0, {upper}] "
            f"for alpha={alpha}")
    i = sign_change[0]
    root = optimize.brentq(frequency_residual, grid[i], grid[i + 1],
                           args=(alpha,), xtol=1e-15, rtol=4 * np.finfo(float).eps,
                           maxiter=200)
    rel = abs(float(frequency_residual(root, alpha))) / _residual_scale(root, alpha)
    if rel >= 1e-12:
        raise RootIsolationError(f"root refinement stalled, relative residual {rel:.2e}")
    return float(root)


# ---------------------------------------------------------------------------
# mode shape

_GL_INNER = leggauss(40)


@dataclass(frozen=True)
class ModeShape:
    """First assumed mode on xi in [0, 1].

    ``phi``, ``dphi``, ``d2phi``, ``d3phi`` are derivatives with respect to
    xi.  ``c1(xi)`` is the axial-shortening function 0.5 * int_0^xi phi'^2.
    """

    mass_ratio: float
    beta_l: float
    omega: float
    sigma: float = field(repr=False)
    linear: bool = False

    def phi(self, xi):
        b, s = self.beta_l, self.sigma
        x = b * np.asarray(xi, dtype=float)
        return np.cos(x) - np.cosh(x) - s * (np.sin(x) - np.sinh(x))

    def dphi(self, xi):
        b, s = self.beta_l, self.sigma
        x = b * np.asarray(xi, dtype=float)
        return b * (-np.sin(x) - np.sinh(x) - s * (np.cos(x) - np.cosh(x)))

    def d2phi(self, xi):
        b, s = self.beta_l, self.sigma
        x = b * np.asarray(xi, dtype=float)
        return b ** 2 * (-np.cos(x) - np.cosh(x) + s * (np.sin(x) + np.sinh(x)))

    def d3phi(self, xi):
        b, s = self.beta_l, self.sigma
        x = b * np.asarray(xi, dtype=float)
        return b ** 3 * (np.sin(x) - np.sinh(x) + s * (np.cos(x) + np.cosh(x)))

    def c1(self, xi):
        if self.linear:
            return np.zeros_like(np.asarray(xi, dtype=float))
        return self._shortening(xi)

    def _shortening(self, xi):
        xi = np.asarray(xi, dtype=float)
        nodes, weights = _GL_INNER
        # 40-point Gauss-Legendre is exact to rounding for this entire function
        pts = 0.5 * xi[..., None] * (nodes + 1.0)
        return 0.25 * xi * np.sum(weights * self.dphi(pts) ** 2, axis=-1)

    def dc1(self, xi):
        if self.linear:
            return np.zeros_like(np.asarray(xi, dtype=float))
        return 0.5 * self.dphi(xi) ** 2


def mode_shape(beta_l: float, beam: BeamConfig) -> ModeShape:
    if not beta_l > 0:
        raise ModelError("beta_l must be positive")
    b = beta_l
    sigma = (math.cos(b) + math.cosh(b)) / (math.sin(b) + math.sinh(b))
    beta = beta_l / beam.length
    omega = math.sqrt(beam.flexural_rigidity / beam.linear_density) * beta ** 2
    return ModeShape(mass_ratio=beam.mass_ratio, beta_l=beta_l, omega=omega,
                     sigma=sigma, linear=beam.model_kind == "linear")


# ---------------------------------------------------------------------------
# coefficients

@dataclass(frozen=True)
class ModelCoefficients:
    """Dimensionless groups and spatial constants entering the equations of motion.

    ``lam1 .. lam6`` are the slider, tip-mass, hub-inertia, gravity,
    slenderness and hub-radius groups.  ``c1_l`` is c1 evaluated at the tip.
    """

    lam1: float
    lam2: float
    lam3: float
    lam4: float
    lam5: float
    lam6: float
    phi_l: float
    c1_l: float
    c2: float
    c3: float
    c4: float
    c5: float
    c6: float
    c7: float
    c8: float
    c9: float
    c10: float
    c11: float
    c12: float
    kind: ModelKind = "nonlinear"
    damping: float = 0.0
    centrifugal: bool = False

    @property
    def c12_eff(self) -> float:
        """c12 as it enters the equations of motion."""
        return self.c12 if self.centrifugal else 0.0

    @property
    def hub_mass_group(self) -> float:
        """2 lam3 / lam6^2, the uniform-disk hub mass over rho l."""
        return 2.0 * self.lam3 / self.lam6 ** 2 if self.lam6 > 0 else 0.0

    def replace(self, **changes) -> "ModelCoefficients":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


_SPATIAL_NAMES = ("c1_l", "c2", "c3", "c4", "c5", "c6", "c7", "c8", "c9",
                  "c10", "c11", "c12")
LINEAR_ZEROED = ("c1_l", "c3", "c6", "c7", "c10")


def _integrands(shape: ModeShape, lam6: float) -> dict[str, Callable]:
    phi, dphi, d2phi = shape.phi, shape.dphi, shape.d2phi
    c1 = shape._shortening
    return {
        "c2": lambda x: d2phi(x) ** 2,
        "c3": lambda x: d2phi(x) ** 2 * dphi(x) ** 2,
        "c4": lambda x: c1(x),
        "c5": lambda x: phi(x),
        "c6": lambda x: c1(x) ** 2,
        "c7": lambda x: 2.0 * x * c1(x),
        "c8": lambda x: phi(x) ** 2,
        "c9": lambda x: 2.0 * x * phi(x),
        "c10": lambda x: 2.0 * c1(x) * phi(x),
        "c11": lambda x: 0.25 * dphi(x) ** 4,
        "c12": lambda x: (lam6 * (1.0 - x) + 0.5 * (1.0 - x * x)) * dphi(x) ** 2,
    }


def _gauss_composite(f, nodes: int, panels: int) -> float:
    x, w = leggauss(nodes)
    edges = np.linspace(0.0, 1.0, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    pts = mid[:, None] + half[:, None] * x
    return float(np.sum(half[:, None] * w * f(pts)))


def _spatial_constants(shape: ModeShape, lam6: float, nodes: int,
                       rule: str) -> dict[str, float]:
    funcs = _integrands(shape, lam6)
    out = {"c1_l": float(shape._shortening(1.0))}
    for name, f in funcs.items():
        if rule == "gauss":
            out[name] = _gauss_composite(f, nodes, 4)
        elif rule == "adaptive":
            val, _ = integrate.quad(lambda x: float(f(np.float64(x))), 0.0, 1.0,
                                    epsabs=1e-14, epsrel=1e-12, limit=200)
            out[name] = float(val)
        else:
            raise ValueError(f"unknown quadrature rule {rule!r}")
    return out


def compute_coefficients(beam: BeamConfig, shape: ModeShape | None = None,
                         nodes: int = 24, rule: str = "gauss",
                         damping: float = 0.0) -> ModelCoefficients:
    """Assemble the dimensionless groups and quadrature constants.

    With ``rule="gauss"`` the constants are computed with composite
    Gauss-Legendre at ``nodes`` and ``2 * nodes`` points per panel and must
    agree to 1e-8 relative.  ``rule="adaptive"`` uses QUADPACK instead.
    """
    if shape is None:
        shape = mode_shape(solve_frequency_equation(beam.mass_ratio), beam)
    l, rho, ei = beam.length, beam.linear_density, beam.flexural_rigidity
    lam6 = beam.hub_radius / l

    consts = _spatial_constants(shape, lam6, nodes, rule)
    if rule == "gauss":
        finer = _spatial_constants(shape, lam6, 2 * nodes, rule)
        for name in consts:
            scale = max(abs(finer[name]), 1e-300)
            if abs(consts[name] - finer[name]) > 1e-8 * scale:
                raise QuadratureError(
                    f"{name} not converged: {consts[name]!r} vs {finer[name]!r}")
        consts = finer

    if beam.model_kind == "linear":
        for name in LINEAR_ZEROED:
            consts[name] = 0.0

    return ModelCoefficients(
        lam1=beam.slider_mass / (rho * l),
        lam2=beam.tip_mass / (rho * l),
        lam3=beam.hub_inertia / (rho * l ** 3),
        lam4=rho * beam.gravity * l ** 3 / ei,
        lam5=beam.slenderness,
        lam6=lam6,
        phi_l=float(shape.phi(1.0)),
        kind=beam.model_kind,
        damping=damping,
        centrifugal=beam.centrifugal,
        **consts,
    )


def build_model(beam: BeamConfig, **kwargs) -> tuple[ModeShape, ModelCoefficients]:
    """Frequency root, mode shape and coefficients in one call."""
    shape = mode_shape(solve_frequency_equation(beam.mass_ratio), beam)
    return shape, compute_coefficients(beam, shape, **kwargs)
