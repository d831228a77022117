"""Rest-to-rest reference trajectories for the rigid coordinates.

Every trajectory returns ``(R, R', R'')`` at time ``t``.  Parameters may
carry a leading batch dimension (one row per swarm particle); the output
then has that shape.  Before 0 and after ``T_f`` the reference is held at
its endpoint with zero derivatives.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import expit

TWO_PI = 2.0 * math.pi


class TrajectoryError(ValueError):
    pass


def _clamp(t, T_f):
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < T_f)
    return np.clip(t, 0.0, T_f), inside


def _pin_ends(R, tc, R_i, R_f, T_f):
    """Return the endpoint values exactly instead of up to rounding."""
    shape = np.shape(R)
    R = np.where(tc <= 0.0, np.broadcast_to(R_i, shape), R)
    return np.where(tc >= T_f, np.broadcast_to(R_f, shape), R)


class _Trajectory:
    """Shared clamping logic; subclasses provide ``_eval`` on (0, T_f)."""

    R_i: float
    R_f: float
    T_f: float
    batch_shape: tuple = ()

    def __call__(self, t):
        if np.ndim(t) == 0:
            t = float(t)
            if t <= 0.0:
                return self._rest(self.R_i)
            if t >= self.T_f:
                return self._rest(self.R_f)
            return self._eval(t)
        tc, inside = _clamp(t, self.T_f)
        R, Rd, Rdd = self._eval(tc)
        R = _pin_ends(R, tc, self.R_i, self.R_f, self.T_f)
        return R, np.where(inside, Rd, 0.0), np.where(inside, Rdd, 0.0)

    def _rest(self, value):
        zero = np.zeros(self.batch_shape)
        return np.full(self.batch_shape, float(value)), zero, zero


@dataclass(frozen=True)
class Cycloid(_Trajectory):
    R_i: float
    R_f: float
    T_f: float

    family = "cycloid"

    @property
    def batch_shape(self):
        return np.shape(np.asarray(self.R_f) - self.R_i)

    def __post_init__(self):
        if not self.T_f > 0:
            raise TrajectoryError("T_f must be positive")

    def _eval(self, t):
        dR = self.R_f - self.R_i
        tau = t / self.T_f
        arg = TWO_PI * tau
        R = dR * (tau - np.sin(arg) / TWO_PI) + self.R_i
        Rd = dR * (1.0 - np.cos(arg)) / self.T_f
        Rdd = dR * TWO_PI * np.sin(arg) / self.T_f ** 2
        return R, Rd, Rdd

    def params(self) -> dict:
        return {"R_i": self.R_i, "R_f": self.R_f, "T_f": self.T_f}


# ---------------------------------------------------------------------------
# spline with quartic end segments

def knot_times(n_knots: int, T_f: float) -> np.ndarray:
    """Endpoints plus ``n_knots`` equally spaced interior times."""
    return T_f * np.arange(n_knots + 2) / (n_knots + 1)


@lru_cache(maxsize=32)
def _spline_operator(n_knots: int, T_f: float) -> np.ndarray:
    """Matrix mapping knot values (N + 2,) to segment coefficients.

    End segments are quartics (value, R' = R'' = 0 at the boundary), the
    interior segments cubics, joined with C2 continuity.  That is the
    lowest degree for which the four boundary conditions and interpolation
    fix the spline uniquely.  Coefficients are stored in ascending powers of
    local time, padded to five per segment.
    """
    times = knot_times(n_knots, T_f)
    nseg = n_knots + 1
    degrees = [4] + [3] * (nseg - 2) + [4] if nseg > 1 else [4]
    offsets = np.concatenate(([0], np.cumsum([d + 1 for d in degrees])))
    n_unknown = offsets[-1]
    rows, rhs = [], []

    def poly_row(seg, tau, deriv):
        row = np.zeros(n_unknown)
        for p in range(deriv, degrees[seg] + 1):
            coef = math.factorial(p) / math.factorial(p - deriv)
            row[offsets[seg] + p] = coef * tau ** (p - deriv)
        return row

    def y_unit(i):
        e = np.zeros(n_knots + 2)
        e[i] = 1.0
        return e

    zero = np.zeros(n_knots + 2)
    for seg in range(nseg):
        h = times[seg + 1] - times[seg]
        rows += [poly_row(seg, 0.0, 0), poly_row(seg, h, 0)]
        rhs += [y_unit(seg), y_unit(seg + 1)]
        if seg > 0:
            hp = times[seg] - times[seg - 1]
            for d in (1, 2):
                rows.append(poly_row(seg - 1, hp, d) - poly_row(seg, 0.0, d))
                rhs.append(zero)
    h_last = times[-1] - times[-2]
    for d in (1, 2):
        rows.append(poly_row(0, 0.0, d))
        rhs.append(zero)
        rows.append(poly_row(nseg - 1, h_last, d))
        rhs.append(zero)
    A = np.array(rows)
    B = np.array(rhs)
    sol = np.linalg.solve(A, B)  # (n_unknown, N + 2)
    op = np.zeros((nseg, 5, n_knots + 2))
    for seg in range(nseg):
        op[seg, : degrees[seg] + 1] = sol[offsets[seg]: offsets[seg + 1]]
    op.setflags(write=False)
    return op


class Spline(_Trajectory):
    """C2 piecewise polynomial through equally spaced knot values.

    ``knots`` holds the interior values ``R_{d,1..N}`` (last axis); the
    endpoints are ``R_i`` at 0 and ``R_f`` at ``T_f``.
    """

    family = "spline"

    def __init__(self, R_i, R_f, T_f, knots):
        knots = np.asarray(knots, dtype=float)
        if knots.ndim == 0 or knots.shape[-1] < 1:
            raise TrajectoryError("spline needs at least one interior knot")
        if not T_f > 0:
            raise TrajectoryError("T_f must be positive")
        self.R_i, self.R_f, self.T_f = R_i, R_f, float(T_f)
        self.knots = knots
        n = knots.shape[-1]
        self.times = knot_times(n, self.T_f)
        batch = knots.shape[:-1]
        values = np.concatenate(
            (np.broadcast_to(R_i, batch + (1,)), knots,
             np.broadcast_to(R_f, batch + (1,))), axis=-1)
        self.coefs = np.einsum("skj,...j->...sk", _spline_operator(n, self.T_f), values)
        self.batch_shape = batch

    def _eval(self, t):
        idx = np.clip(np.searchsorted(self.times, t, side="right") - 1,
                      0, len(self.times) - 2)
        tau = t - self.times[idx]
        if np.ndim(idx) == 0 or not self.batch_shape:
            c = self.coefs[..., idx, :] if np.ndim(idx) == 0 else self.coefs[idx]
            c0, c1, c2, c3, c4 = (c[..., k] for k in range(5))
        else:
            # times broadcast against the batch; gather each element's segment
            shape = np.broadcast_shapes(np.shape(idx), self.batch_shape)
            nseg = self.coefs.shape[-2]
            sel = np.broadcast_to(idx, shape)[..., None]
            c0, c1, c2, c3, c4 = (
                np.take_along_axis(np.broadcast_to(self.coefs[..., k], shape + (nseg,)),
                                   sel, axis=-1)[..., 0]
                for k in range(5))
        R = c0 + tau * (c1 + tau * (c2 + tau * (c3 + tau * c4)))
        Rd = c1 + tau * (2 * c2 + tau * (3 * c3 + tau * 4 * c4))
        Rdd = 2 * c2 + tau * (6 * c3 + tau * 12 * c4)
        return R, Rd, Rdd

    def params(self) -> dict:
        out = {"R_i": self.R_i, "R_f": self.R_f, "T_f": self.T_f}
        out.update({f"knot_{n + 1}": v for n, v in enumerate(np.ravel(self.knots))})
        return out


# ---------------------------------------------------------------------------
# three-layer network

class Ann(_Trajectory):
    """Sigmoid hidden layer wrapped in a cycloid output activation.

    ``a`` (steepnesses, shape (..., K)) and ``w`` (the first K - 1 output
    weights) are free; the biases are spread evenly over [0, T_f] and the
    last weight is fixed so that the network output reaches 1 at ``T_f``.
    """

    family = "ann"

    def __init__(self, R_i, R_f, T_f, a, w):
        a = np.asarray(a, dtype=float)
        w = np.asarray(w, dtype=float)
        if not T_f > 0:
            raise TrajectoryError("T_f must be positive")
        K = a.shape[-1]
        if K < 2 or w.shape[-1] != K - 1:
            raise TrajectoryError("need K >= 2 steepnesses and K - 1 weights")
        if np.any(~(a > 0)):
            raise TrajectoryError("steepnesses must be positive")
        self.R_i, self.R_f, self.T_f = R_i, R_f, float(T_f)
        self.a = a
        self.b = hidden_biases(K, self.T_f)
        self._offset = expit(-a * self.b)
        yT = expit(a * (self.T_f - self.b)) - self._offset
        if np.any(np.abs(yT[..., -1]) < 1e-12):
            raise TrajectoryError("last hidden unit vanishes at T_f")
        w_last = (1.0 - np.sum(w * yT[..., :-1], axis=-1)) / yT[..., -1]
        self.w = np.concatenate((w, w_last[..., None]), axis=-1)
        self.batch_shape = a.shape[:-1]

    def hidden(self, t):
        """Hidden activations and their first two time derivatives."""
        t = np.asarray(t, dtype=float)[..., None]
        sig = expit(self.a * (t - self.b))
        ds = sig * (1.0 - sig)
        y = sig - self._offset
        yd = self.a * ds
        ydd = self.a ** 2 * ds * (1.0 - 2.0 * sig)
        return y, yd, ydd

    def output(self, t):
        y, yd, ydd = self.hidden(t)
        return (np.sum(self.w * y, axis=-1), np.sum(self.w * yd, axis=-1),
                np.sum(self.w * ydd, axis=-1))

    def _eval(self, t):
        O, Od, Odd = self.output(t)
        dR = self.R_f - self.R_i
        arg = TWO_PI * O
        one_minus_cos = 1.0 - np.cos(arg)
        R = dR * (O - np.sin(arg) / TWO_PI) + self.R_i
        Rd = dR * one_minus_cos * Od
        Rdd = dR * (TWO_PI * np.sin(arg) * Od * Od + one_minus_cos * Odd)
        return R, Rd, Rdd

    def params(self) -> dict:
        out = {"R_i": self.R_i, "R_f": self.R_f, "T_f": self.T_f}
        out.update({f"a_{k + 1}": v for k, v in enumerate(np.ravel(self.a))})
        out.update({f"w_{k + 1}": v for k, v in enumerate(np.ravel(self.w))})
        return out


def hidden_biases(K: int, T_f: float) -> np.ndarray:
    k = np.arange(1, K + 1)
    return (k - 1.0) / (K - 1.0) * T_f


# ---------------------------------------------------------------------------
# plans over the three rigid coordinates

COORDINATES = ("theta", "x", "y")


@dataclass
class Plan:
    """Reference for (theta, X, Y); each entry is any trajectory above."""

    theta: object
    x: object
    y: object

    @property
    def T_f(self) -> float:
        return max(c.T_f for c in (self.theta, self.x, self.y))

    def __call__(self, t):
        parts = [c(t) for c in (self.theta, self.x, self.y)]
        shapes = [np.shape(p[0]) for p in parts]
        if shapes[0] == shapes[1] == shapes[2]:
            return tuple(np.array([p[k] for p in parts]) for k in range(3))
        shape = np.broadcast_shapes(*shapes)
        return tuple(np.array([np.broadcast_to(p[k], shape) for p in parts])
                     for k in range(3))

    def items(self):
        return zip(COORDINATES, (self.theta, self.x, self.y))


def to_text(plan: Plan, header: dict | None = None) -> str:
    """Labeled one-parameter-per-line serialization."""
    lines = []
    for key, value in (header or {}).items():
        lines.append(f"{key} = {value}")
    for name, traj in plan.items():
        lines.append(f"{name}.family = {traj.family}")
        for key, value in traj.params().items():
            lines.append(f"{name}.{key} = {float(value)!r}")
    return "\n".join(lines) + "\n"


def from_text(text: str) -> tuple[Plan, dict]:
    """Inverse of :func:`to_text`; returns the plan and any header entries."""
    fields: dict[str, dict] = {c: {} for c in COORDINATES}
    header = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise TrajectoryError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        coord, _, name = key.partition(".")
        if coord in fields and name:
            fields[coord][name] = value
        else:
            header[key] = value
    trajs = {}
    for coord, f in fields.items():
        if "family" not in f:
            raise TrajectoryError(f"missing {coord}.family")
        trajs[coord] = _build(coord, f)
    return Plan(**trajs), header


def _numbered(f, prefix):
    keys = sorted((k for k in f if k.startswith(prefix)),
                  key=lambda k: int(k[len(prefix):]))
    return [float(f[k]) for k in keys]


def _build(coord, f):
    try:
        family = f["family"]
        R_i, R_f, T_f = float(f["R_i"]), float(f["R_f"]), float(f["T_f"])
    except KeyError as exc:
        raise TrajectoryError(f"missing {coord}.{exc.args[0]}") from None
    if family == "cycloid":
        return Cycloid(R_i, R_f, T_f)
    if family == "spline":
        return Spline(R_i, R_f, T_f, _numbered(f, "knot_"))
    if family == "ann":
        w = _numbered(f, "w_")
        return Ann(R_i, R_f, T_f, _numbered(f, "a_"), w[:-1])
    raise TrajectoryError(f"unknown family {family!r} for {coord}")
