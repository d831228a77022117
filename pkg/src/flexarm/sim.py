"""Time integration and the residual-vibration cost.

Integration is delegated to scipy's Dormand-Prince 5(4) pair.  Two vector
fields are used: the full eight-dimensional model (free or controlled
motion) and the two-dimensional elastic equation in which the rigid
coordinates follow a prescribed plan.  The latter is what the planner
optimizes; it also comes in a batched form that advances a whole swarm as
one ODE.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp

from .dynamics import (Q_MAX, StateValidityError, SystemState, elastic_accel,
                       energy, full_rhs, inverse_dynamics, static_deflection)
from .model import ModelCoefficients

SCHEMA = "flexarm-timeseries/1"
STATE_COLUMNS = ("t", "q", "theta", "X", "Y", "qdot", "thetadot", "Xdot", "Ydot")


class IntegrationError(ArithmeticError):
    """The integrator could not reach the end of the horizon."""


@dataclass(frozen=True)
class SimConfig:
    rtol: float = 1e-8
    atol: float = 1e-10
    max_step: float = np.inf
    t_end: float = 10.0
    dt_out: float = 0.01
    q_max: float = Q_MAX

    def __post_init__(self):
        for name in ("rtol", "atol", "t_end", "dt_out", "max_step", "q_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"SimConfig.{name} must be positive")

    def replace(self, **changes) -> "SimConfig":
        return replace(self, **changes)


#: Relaxed tolerances for the inner fitness runs of the planner.
FITNESS_CONFIG = SimConfig(rtol=1e-6, atol=1e-8)


@dataclass
class TimeSeries:
    """Uniformly sampled columns keyed by name; ``t`` is always present."""

    columns: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if "t" not in self.columns:
            raise ValueError("TimeSeries needs a 't' column")
        self.columns = {k: np.asarray(v, dtype=float) for k, v in self.columns.items()}
        t = self.columns["t"]
        n = len(t)
        if any(len(v) != n for v in self.columns.values()):
            raise ValueError("columns differ in length")
        if n > 1:
            dt = np.diff(t)
            if np.any(dt <= 0):
                raise ValueError("time must be strictly increasing")
            if np.ptp(dt) > 1e-9 * max(1.0, abs(t[-1])):
                raise ValueError("sample period must be uniform")

    def __getitem__(self, key) -> np.ndarray:
        return self.columns[key]

    def __contains__(self, key) -> bool:
        return key in self.columns

    def __len__(self) -> int:
        return len(self.columns["t"])

    @property
    def names(self) -> list[str]:
        return list(self.columns)

    @property
    def t(self) -> np.ndarray:
        return self.columns["t"]

    def add(self, **cols) -> "TimeSeries":
        merged = dict(self.columns)
        merged.update(cols)
        return TimeSeries(merged)

    def states(self) -> np.ndarray:
        """State vectors (n, 8) when the full state is present."""
        return np.column_stack([self.columns[c] for c in STATE_COLUMNS[1:]])

    def to_csv(self, path) -> None:
        names = self.names
        with open(path, "w", newline="") as fh:
            fh.write(f"# schema: {SCHEMA}\n")
            writer = csv.writer(fh)
            writer.writerow(names)
            for row in zip(*(self.columns[n] for n in names)):
                writer.writerow([repr(float(x)) for x in row])

    @classmethod
    def from_csv(cls, path) -> "TimeSeries":
        with open(path, newline="") as fh:
            first = fh.readline().strip()
            if first != f"# schema: {SCHEMA}":
                raise ValueError(f"{path}: unsupported schema line {first!r}")
            reader = csv.reader(fh)
            names = next(reader)
            rows = [[float(x) for x in row] for row in reader if row]
        data = np.array(rows, dtype=float).reshape(-1, len(names))
        return cls({n: data[:, i] for i, n in enumerate(names)})


def sample_times(t0: float, cfg: SimConfig) -> np.ndarray:
    n = int(np.floor(cfg.t_end / cfg.dt_out + 1e-9))
    return t0 + cfg.dt_out * np.arange(n + 1)


def _solve(rhs, y0, t_span, cfg: SimConfig, **kw):
    sol = solve_ivp(rhs, t_span, y0, method="RK45", rtol=cfg.rtol, atol=cfg.atol,
                    max_step=cfg.max_step, **kw)
    if sol.status < 0:
        raise IntegrationError(sol.message)
    return sol


def integrate(rhs, initial, cfg: SimConfig, names=None) -> TimeSeries:
    """Integrate ``y' = rhs(t, y)`` over ``[t0, t0 + cfg.t_end]``.

    ``initial`` is a :class:`SystemState` (columns named after the state) or
    a plain vector (columns ``y0``, ``y1``, ... unless ``names`` is given).
    The result is sampled from the dense output at period ``cfg.dt_out``.
    Leaving the validity bound raises :class:`StateValidityError`; step-size
    underflow raises :class:`IntegrationError`.
    """
    if isinstance(initial, SystemState):
        initial.check(cfg.q_max)
        y0, t0 = initial.to_vector(), float(initial.t)
        names = names or STATE_COLUMNS[1:]
    else:
        y0, t0 = np.asarray(initial, dtype=float), 0.0
        names = names or [f"y{i}" for i in range(len(y0))]
    t_eval = sample_times(t0, cfg)
    sol = _solve(rhs, y0, (t0, t_eval[-1]), cfg, t_eval=t_eval)
    cols = {"t": sol.t}
    cols.update({n: sol.y[i] for i, n in enumerate(names)})
    return TimeSeries(cols)


# ---------------------------------------------------------------------------
# prescribed rigid motion

def prescribed_rhs(plan, coeffs: ModelCoefficients, q_max: float = Q_MAX,
                   freeze: bool = False):
    """Vector field of the elastic equation under a prescribed plan.

    Works for batched plans: the state is ``[q_1..q_n, q'_1..q'_n]``.  A
    component reaching ``|q| >= q_max`` raises, or with ``freeze`` stops
    moving so that the rest of the batch can carry on.
    """
    def rhs(t, y):
        n = y.shape[0] // 2
        q, qd = y[:n], y[n:]
        valid = np.abs(q) < q_max
        R, Rd, Rdd = plan(t)
        if valid.all():
            return np.concatenate((qd, elastic_accel(q, qd, R, Rd, Rdd, coeffs)))
        if not freeze:
            raise StateValidityError(f"|q| reached the validity bound {q_max}")
        qs = np.where(valid, q, 0.0)
        qdd = elastic_accel(qs, qd, R, Rd, Rdd, coeffs)
        return np.concatenate((np.where(valid, qd, 0.0), np.where(valid, qdd, 0.0)))
    return rhs


def initial_deflection(plan, coeffs: ModelCoefficients) -> float:
    theta_i = float(np.ravel(plan(0.0)[0][0])[0])
    return float(static_deflection(theta_i, coeffs)[0])


def final_deflection(plan, coeffs: ModelCoefficients) -> float:
    theta_f = float(np.ravel(plan(plan.T_f)[0][0])[0])
    return float(static_deflection(theta_f, coeffs)[0])


def simulate_prescribed(plan, coeffs: ModelCoefficients, cfg: SimConfig,
                        q0: float | None = None) -> TimeSeries:
    """Elastic response to a plan, with the inputs that realize it.

    The input columns come from the rigid rows of the equations of motion
    evaluated along the solution, and the energy columns from the full
    state.
    """
    q0 = initial_deflection(plan, coeffs) if q0 is None else q0
    ts = integrate(prescribed_rhs(plan, coeffs, cfg.q_max), [q0, 0.0], cfg,
                   names=("q", "qdot"))
    t, q, qd = ts.t, ts["q"], ts["qdot"]
    R, Rd, Rdd = plan(t)
    qdd = elastic_accel(q, qd, R, Rd, Rdd, coeffs)
    u = inverse_dynamics(q, qd, qdd, R, Rd, Rdd, coeffs)
    cols = {"t": t, "q": q, "theta": R[0], "X": R[1], "Y": R[2], "qdot": qd,
            "thetadot": Rd[0], "Xdot": Rd[1], "Ydot": Rd[2],
            "u1": u[0], "u2": u[1], "u3": u[2]}
    return TimeSeries(cols).add(**energy_columns(TimeSeries(cols), coeffs, cfg.q_max))


def simulate_free(initial: SystemState, coeffs: ModelCoefficients,
                  cfg: SimConfig, control=None) -> TimeSeries:
    ts = integrate(full_rhs(coeffs, control, cfg.q_max), initial, cfg)
    return ts.add(**energy_columns(ts, coeffs, cfg.q_max))


def energy_columns(ts: TimeSeries, coeffs, q_max: float = Q_MAX) -> dict:
    T, U = np.empty(len(ts)), np.empty(len(ts))
    for i, (t, y) in enumerate(zip(ts.t, ts.states())):
        T[i], U[i], _ = energy(SystemState.from_vector(y, t), coeffs, q_max)
    return {"T": T, "U": U, "E": T + U}


# ---------------------------------------------------------------------------
# residual-vibration cost

def evaluate_cost(plan, coeffs: ModelCoefficients, cfg: SimConfig | None = None,
                  horizon: float = 3.0, window_start: float = 2.0) -> float:
    """Largest |q - q_bar(theta_f)| over ``(window_start, horizon] * T_f``.

    The elastic equation starts at rest in the static deflection of the
    initial angle.  Extrema are located as zeros of q' by the integrator's
    event machinery (root finding on the dense output), so the maximum is
    exact to integration accuracy rather than to a sampling grid.
    """
    cfg = cfg or SimConfig()
    T_f = plan.T_f
    q_bar = final_deflection(plan, coeffs)
    y0 = [initial_deflection(plan, coeffs), 0.0]

    def turning(t, y):
        return y[1]

    sol = _solve(prescribed_rhs(plan, coeffs, cfg.q_max), y0, (0.0, horizon * T_f),
                 cfg, events=turning, dense_output=True)
    t0 = window_start * T_f
    candidates = [sol.sol(t0)[0], sol.y[0, -1]]
    te, ye = sol.t_events[0], sol.y_events[0]
    if len(te):
        candidates.extend(ye[te > t0, 0])
    return float(np.max(np.abs(np.asarray(candidates) - q_bar)))


def evaluate_cost_batch(plan, n: int, coeffs: ModelCoefficients,
                        cfg: SimConfig = FITNESS_CONFIG, horizon: float = 3.0,
                        window_start: float = 2.0, samples: int = 400) -> np.ndarray:
    """:func:`evaluate_cost` for ``n`` batched plans integrated together.

    The window is sampled at ``samples`` points; between samples where q'
    changes sign the extremum is taken from the cubic Hermite interpolant
    built from (q, q') at both ends, which is accurate to fourth order in
    the sample spacing.  A plan that drives the deflection out of the
    validity bound has no defined cost and gets ``inf``.
    """
    T_f = plan.T_f
    q_bar = final_deflection(plan, coeffs)
    y0 = np.concatenate((np.full(n, initial_deflection(plan, coeffs)), np.zeros(n)))
    t_eval = np.linspace(window_start * T_f, horizon * T_f, samples)
    sol = _solve(prescribed_rhs(plan, coeffs, cfg.q_max, freeze=True), y0,
                 (0.0, horizon * T_f), cfg, t_eval=t_eval)
    q, qd = sol.y[:n] - q_bar, sol.y[n:]
    cost = hermite_max_abs(sol.t, q, qd)
    cost[np.abs(sol.y[:n, -1]) >= cfg.q_max] = np.inf
    return cost


def hermite_max_abs(t, q, qd) -> np.ndarray:
    """Max |q| per row given samples of q and q' on a common grid."""
    best = np.max(np.abs(q), axis=-1)
    h = np.diff(t)
    qa, qb, da, db = q[:, :-1], q[:, 1:], qd[:, :-1] * h, qd[:, 1:] * h
    rows, cols = np.nonzero(np.sign(da) * np.sign(db) < 0)
    if rows.size == 0:
        return best
    qa, qb, da, db = qa[rows, cols], qb[rows, cols], da[rows, cols], db[rows, cols]
    # p(s) = h00 qa + h10 da + h01 qb + h11 db on s in [0, 1]; p'(s) = A s^2 + B s + C
    A = 6 * qa + 3 * da - 6 * qb + 3 * db
    B = -6 * qa - 4 * da + 6 * qb - 2 * db
    C = da
    s = _quadratic_root_in_unit(A, B, C)
    s2, s3 = s * s, s * s * s
    p = ((2 * s3 - 3 * s2 + 1) * qa + (s3 - 2 * s2 + s) * da
         + (-2 * s3 + 3 * s2) * qb + (s3 - s2) * db)
    np.maximum.at(best, rows, np.abs(p))
    return best


def _quadratic_root_in_unit(A, B, C):
    """Root of A s^2 + B s + C in [0, 1] where C and A + B + C differ in sign."""
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = np.sqrt(np.maximum(B * B - 4 * A * C, 0.0))
        # numerically stable pair of roots
        qq = -0.5 * (B + np.copysign(disc, B))
        r1 = qq / A
        r2 = C / qq
        lin = -C / B
    r1 = np.where(np.abs(A) < 1e-14 * (np.abs(B) + np.abs(C)), lin, r1)
    ok1 = (r1 >= 0) & (r1 <= 1)
    s = np.where(ok1, r1, r2)
    return np.clip(np.nan_to_num(s, nan=0.5), 0.0, 1.0)

