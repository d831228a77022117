"""Glue between trajectory families, the residual-vibration cost and PSO."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .pso import SwarmConfig, SwarmResult, optimize, preset
from .sim import FITNESS_CONFIG, SimConfig, evaluate_cost, evaluate_cost_batch
from .trajectory import COORDINATES, Ann, Cycloid, Plan, Spline, knot_times

FAMILIES = ("cycloid", "spline", "ann")


@dataclass(frozen=True)
class Task:
    """Rest-to-rest move; ``T_f`` in dimensionless time."""

    theta_i: float = -math.pi / 2
    theta_f: float = 0.0
    x_i: float = 0.0
    x_f: float = 1.0
    y_i: float = 0.0
    y_f: float = 0.0
    T_f: float = 1.0

    def __post_init__(self):
        if not self.T_f > 0:
            raise ValueError("T_f must be positive")

    def endpoints(self, coord: str) -> tuple[float, float]:
        key = {"theta": "theta", "x": "x", "y": "y"}[coord]
        return getattr(self, f"{key}_i"), getattr(self, f"{key}_f")

    def cycloid(self, coord: str) -> Cycloid:
        return Cycloid(*self.endpoints(coord), self.T_f)

    def cycloid_plan(self) -> Plan:
        return Plan(*(self.cycloid(c) for c in COORDINATES))


@dataclass(frozen=True)
class FamilySettings:
    """Search-space layout of the optimized families.

    Spline knots are searched in a box of half-width
    ``knot_margin * max(|R_f - R_i|, 1)`` around the cycloid through the
    same endpoints.  ANN steepnesses are searched as ``a_k * T_f`` in
    ``[a_min, a_max]`` so the box does not depend on the time scale.
    """

    knots: int = 5
    knot_margin: float = 0.1
    hidden: int = 5
    a_min: float = 1.0
    a_max: float = 10.0
    w_min: float = 0.0
    w_max: float = 1.0

    def __post_init__(self):
        if self.knots < 1 or self.hidden < 2:
            raise ValueError("need at least one knot and two hidden units")
        if not (0 < self.a_min < self.a_max and self.w_min < self.w_max
                and self.knot_margin > 0):
            raise ValueError("invalid family bounds")


class Encoding:
    """Maps PSO position vectors to (batched) plans.

    Optimized coordinates use ``family``; the rest stay cycloids.
    """

    def __init__(self, task: Task, family: str, coordinates=("theta",),
                 settings: FamilySettings | None = None):
        if family not in FAMILIES:
            raise ValueError(f"unknown family {family!r}")
        if coordinates == "all":
            coordinates = COORDINATES
        elif isinstance(coordinates, str):
            coordinates = (coordinates,)
        unknown = set(coordinates) - set(COORDINATES)
        if unknown:
            raise ValueError(f"unknown coordinate(s) {sorted(unknown)}")
        self.task, self.family = task, family
        self.coordinates = tuple(c for c in COORDINATES if c in coordinates)
        self.settings = settings or FamilySettings()
        self._layout = []
        lower, upper, labels = [], [], []
        if family != "cycloid":
            for coord in self.coordinates:
                lo, hi, lab = self._coord_bounds(coord)
                self._layout.append((coord, len(lower), len(lo)))
                lower += lo
                upper += hi
                labels += [f"{coord}.{x}" for x in lab]
        self.lower, self.upper, self.labels = lower, upper, labels

    @property
    def dim(self) -> int:
        return len(self.lower)

    def _coord_bounds(self, coord):
        s, T_f = self.settings, self.task.T_f
        R_i, R_f = self.task.endpoints(coord)
        if self.family == "spline":
            centre = self.task.cycloid(coord)(knot_times(s.knots, T_f)[1:-1])[0]
            half = s.knot_margin * max(abs(R_f - R_i), 1.0)
            return (list(centre - half), list(centre + half),
                    [f"knot_{n + 1}" for n in range(s.knots)])
        K = s.hidden
        lo = [s.a_min] * K + [s.w_min] * (K - 1)
        hi = [s.a_max] * K + [s.w_max] * (K - 1)
        labels = [f"a_{k + 1}*T_f" for k in range(K)] + [f"w_{k + 1}" for k in range(K - 1)]
        return lo, hi, labels

    def decode(self, X) -> Plan:
        """Plan for one position (d,) or a batch (n, d)."""
        X = np.asarray(X, dtype=float)
        trajs = {c: self.task.cycloid(c) for c in COORDINATES}
        K = self.settings.hidden
        for coord, start, size in self._layout:
            part = X[..., start:start + size]
            R_i, R_f = self.task.endpoints(coord)
            if self.family == "spline":
                trajs[coord] = Spline(R_i, R_f, self.task.T_f, part)
            else:
                trajs[coord] = Ann(R_i, R_f, self.task.T_f, part[..., :K] / self.task.T_f,
                                   part[..., K:])
        return Plan(**trajs)


@dataclass
class PlanningResult:
    plan: Plan
    cost: float
    family: str
    baseline_cost: float
    swarm: SwarmResult | None = None
    labels: list = field(default_factory=list)

    @property
    def history(self) -> np.ndarray:
        return np.array([self.cost]) if self.swarm is None else self.swarm.history


def fitness_function(encoding: Encoding, coeffs, cfg: SimConfig = FITNESS_CONFIG):
    """Vectorized fitness: positions (n, d) to residual-vibration costs (n,)."""
    def fitness(X):
        X = np.atleast_2d(X)
        try:
            plan = encoding.decode(X)
        except ValueError:
            return np.full(len(X), np.inf)
        return evaluate_cost_batch(plan, len(X), coeffs, cfg)
    return fitness


def plan_trajectory(task: Task, coeffs, family: str = "ann", coordinates=("theta",),
                    settings: FamilySettings | None = None, swarm: SwarmConfig | None = None,
                    preset_name: str = "canonical", seed: int = 0, particles: int = 30,
                    iterations: int = 70, inner: SimConfig = FITNESS_CONFIG,
                    final: SimConfig | None = None, on_checkpoint=None) -> PlanningResult:
    """Search ``family`` for the plan with the least residual vibration.

    The swarm ranks particles with relaxed tolerances; the winner is then
    re-evaluated with ``final`` (tight) tolerances, as is the cycloid
    baseline.
    """
    final = final or SimConfig()
    baseline = evaluate_cost(task.cycloid_plan(), coeffs, final)
    enc = Encoding(task, family, coordinates, settings)
    if family == "cycloid":
        return PlanningResult(task.cycloid_plan(), baseline, family, baseline)
    if swarm is None:
        swarm = preset(preset_name, enc.lower, enc.upper, seed=seed,
                       particles=particles, iterations=iterations)
    result = optimize(fitness_function(enc, coeffs, inner), swarm, vectorized=True,
                      on_checkpoint=on_checkpoint)
    plan = enc.decode(result.x)
    cost = evaluate_cost(plan, coeffs, final)
    return PlanningResult(plan, cost, family, baseline, result, enc.labels)
