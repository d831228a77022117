"""Particle swarm optimizer with the constriction-factor velocity update.

Two update variants share one code path::

    v <- chi * (w v + c1 r1 (p - x) + c2 r2 (g - x)),    x <- x + v

with ``w = 1`` for the canonical constriction form and an explicit inertia
weight otherwise.  ``r1`` and ``r2`` are drawn independently per particle
and per dimension.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np


class SwarmError(ValueError):
    pass


def constriction_factor(c1: float, c2: float) -> float:
    """chi = 2 / |2 - phi - sqrt(phi^2 - 4 phi)| with phi = c1 + c2 > 4."""
    phi = c1 + c2
    if not phi > 4.0:
        raise SwarmError(f"constriction needs c1 + c2 > 4 (got {phi:g})")
    return 2.0 / abs(2.0 - phi - math.sqrt(phi * phi - 4.0 * phi))


@dataclass(frozen=True)
class SwarmConfig:
    lower: tuple
    upper: tuple
    particles: int = 30
    iterations: int = 70
    c1: float = 2.05
    c2: float = 2.05
    chi: float | None = None
    inertia: float | None = None
    seed: int = 0
    window: int = 15
    tol: float = 1e-8
    max_resample: int = 20
    checkpoint_every: int = 10

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1 or lo.size == 0:
            raise SwarmError("bounds must be two equal-length 1-d sequences")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)) and np.all(hi > lo)):
            raise SwarmError("bounds must be finite with upper > lower")
        if self.particles < 2:
            raise SwarmError("need at least two particles")
        if self.iterations < 0 or self.window < 1 or self.max_resample < 0:
            raise SwarmError("iteration counts must be non-negative")
        if self.chi is None:
            constriction_factor(self.c1, self.c2)  # validates phi > 4
        elif not self.chi > 0:
            raise SwarmError("chi must be positive")
        object.__setattr__(self, "lower", tuple(float(x) for x in lo))
        object.__setattr__(self, "upper", tuple(float(x) for x in hi))

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def constriction(self) -> float:
        return constriction_factor(self.c1, self.c2) if self.chi is None else self.chi

    @property
    def weight(self) -> float:
        return 1.0 if self.inertia is None else self.inertia

    def replace(self, **changes) -> "SwarmConfig":
        return replace(self, **changes)


PRESETS = {
    # Clerc-Kennedy constriction, chi derived (0.72984)
    "canonical": dict(c1=2.05, c2=2.05, chi=None, inertia=None),
    # mid-points of the published simulation ranges, inertia-weight variant
    "paper": dict(c1=0.8, c2=1.05, chi=0.875, inertia=0.775),
}


def preset(name: str, lower, upper, **overrides) -> SwarmConfig:
    try:
        params = dict(PRESETS[name])
    except KeyError:
        raise SwarmError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    params.update(overrides)
    return SwarmConfig(lower=tuple(lower), upper=tuple(upper), **params)


def update(x, v, p, g, r1, r2, chi, c1, c2, inertia=1.0):
    """One velocity/position update without bound handling."""
    v_new = chi * (inertia * v + c1 * r1 * (p - x) + c2 * r2 * (g - x))
    return x + v_new, v_new


def update_matrix(chi: float, phi: float, inertia: float = 1.0) -> np.ndarray:
    """Linear map of (v, x - p) for one dimension with r1 = r2 = 1, p = g."""
    return np.array([[chi * inertia, -chi * phi],
                     [chi * inertia, 1.0 - chi * phi]])


@dataclass
class SwarmState:
    """Everything the loop carries between iterations."""

    x: np.ndarray
    v: np.ndarray
    cost: np.ndarray
    pbest: np.ndarray
    pbest_cost: np.ndarray
    gbest: np.ndarray
    gbest_cost: float
    iteration: int = 0


@dataclass
class SwarmResult:
    x: np.ndarray
    cost: float
    history: np.ndarray
    iterations: int
    evaluations: int
    resampled: int
    converged: bool
    seed: int
    state: SwarmState = field(repr=False, default=None)


def _evaluate(fitness, X, vectorized, mapper):
    if vectorized:
        out = np.asarray(fitness(X), dtype=float).reshape(len(X))
    else:
        out = np.fromiter(mapper(fitness, list(X)), dtype=float, count=len(X))
    return out


def optimize(fitness, cfg: SwarmConfig, vectorized: bool = False, mapper=map,
             on_checkpoint=None) -> SwarmResult:
    """Minimize ``fitness`` over the box of ``cfg``.

    Parameters
    ----------
    fitness
        Maps a position (d,) to a cost, or with ``vectorized`` a batch
        (n, d) to costs (n,).
    mapper
        ``map``-compatible callable used for per-particle evaluation; a
        process pool's ``map`` parallelizes without changing results since
        every random draw happens before evaluation.
    on_checkpoint
        Called with the :class:`SwarmState` every ``cfg.checkpoint_every``
        iterations.

    Non-finite costs send the particle back to a fresh uniform draw (up to
    ``cfg.max_resample`` times per event); the number of such redraws is
    reported.  The best-cost history has one entry for the initial swarm and
    one per iteration, and never increases.
    """
    rng = np.random.default_rng(cfg.seed)
    lo, hi = np.array(cfg.lower), np.array(cfg.upper)
    width = hi - lo
    n, d = cfg.particles, cfg.dim
    chi, w = cfg.constriction, cfg.weight
    evaluations = 0
    resampled = 0

    def draw(k):
        x = lo + width * rng.random((k, d))
        v = width * (rng.random((k, d)) - 0.5)
        return x, v

    def evaluate_with_resample(X, V):
        nonlocal evaluations, resampled
        cost = _evaluate(fitness, X, vectorized, mapper)
        evaluations += len(X)
        for _ in range(cfg.max_resample):
            bad = np.flatnonzero(~np.isfinite(cost))
            if bad.size == 0:
                break
            X[bad], V[bad] = draw(bad.size)
            cost[bad] = _evaluate(fitness, X[bad], vectorized, mapper)
            evaluations += bad.size
            resampled += bad.size
        return np.where(np.isfinite(cost), cost, np.inf)

    x, v = draw(n)
    cost = evaluate_with_resample(x, v)
    pbest, pbest_cost = x.copy(), cost.copy()
    best = int(np.argmin(pbest_cost))  # first index on ties
    state = SwarmState(x, v, cost, pbest, pbest_cost, pbest[best].copy(),
                       float(pbest_cost[best]))
    history = [state.gbest_cost]
    converged = False

    for it in range(1, cfg.iterations + 1):
        r1 = rng.random((n, d))
        r2 = rng.random((n, d))
        x, v = update(state.x, state.v, state.pbest, state.gbest, r1, r2,
                      chi, cfg.c1, cfg.c2, w)
        hit = (x < lo) | (x > hi)
        x = np.clip(x, lo, hi)
        v[hit] = 0.0
        cost = evaluate_with_resample(x, v)

        improved = cost < state.pbest_cost
        state.pbest[improved] = x[improved]
        state.pbest_cost[improved] = cost[improved]
        best = int(np.argmin(state.pbest_cost))
        if state.pbest_cost[best] < state.gbest_cost:
            state.gbest = state.pbest[best].copy()
            state.gbest_cost = float(state.pbest_cost[best])
        state.x, state.v, state.cost, state.iteration = x, v, cost, it
        history.append(state.gbest_cost)

        if on_checkpoint is not None and it % cfg.checkpoint_every == 0:
            on_checkpoint(state)
        if it >= cfg.window and np.isfinite(history[-1]):
            old = history[-1 - cfg.window]
            if old - history[-1] <= cfg.tol * abs(old):
                converged = True
                break

    if not np.isfinite(state.gbest_cost):
        raise SwarmError("no particle ever produced a finite cost")
    return SwarmResult(x=state.gbest.copy(), cost=state.gbest_cost,
                       history=np.array(history), iterations=state.iteration,
                       evaluations=evaluations, resampled=resampled,
                       converged=converged, seed=cfg.seed, state=state)


def write_checkpoint(path, state: SwarmState, seed: int, labels=None, extra: str = ""):
    """Plain-text checkpoint: one labeled value per line."""
    labels = labels or [f"x{i + 1}" for i in range(len(state.gbest))]
    lines = [f"iteration = {state.iteration}", f"seed = {seed}",
             f"best_cost = {state.gbest_cost!r}"]
    lines += [f"best.{name} = {float(val)!r}" for name, val in zip(labels, state.gbest)]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n" + extra)
