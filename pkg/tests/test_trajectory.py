import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flexarm.trajectory import (Ann, Cycloid, Plan, Spline, TrajectoryError, from_text,
                                hidden_biases, knot_times, to_text)

T_F = 3.674


def fd_check(traj, ts, h=1e-5, tol=1e-5):
    R, Rd, Rdd = traj(ts)
    Rp, Rdp, _ = traj(ts + h)
    Rm, Rdm, _ = traj(ts - h)
    assert np.allclose((Rp - Rm) / (2 * h), Rd, atol=tol)
    assert np.allclose((Rdp - Rdm) / (2 * h), Rdd, atol=tol * 10)


def check_rest_to_rest(traj, R_i, R_f):
    R, Rd, Rdd = traj(np.array([0.0, traj.T_f]))
    assert R[0] == R_i and R[1] == R_f
    assert np.max(np.abs(Rd)) < 1e-9 and np.max(np.abs(Rdd)) < 1e-9
    R, Rd, Rdd = traj(np.array([-1.0, traj.T_f + 1.0]))
    assert list(R) == [R_i, R_f] and not np.any(Rd) and not np.any(Rdd)


def test_cycloid_values():
    c = Cycloid(-math.pi / 2, 0.0, T_F)
    check_rest_to_rest(c, -math.pi / 2, 0.0)
    R, Rd, _ = c(T_F / 2)
    assert R == pytest.approx(-math.pi / 4)
    assert Rd == pytest.approx(2 * (math.pi / 2) / T_F)
    fd_check(c, np.linspace(0.1, T_F - 0.1, 17))


def test_knot_times_even():
    assert np.allclose(knot_times(3, 2.0), [0, 0.5, 1.0, 1.5, 2.0])


def piece_limits(s, k, side):
    """Value and two derivatives of piece ``k`` at its left (0) or right (1) end."""
    c = s.coefs[k]
    tau = 0.0 if side == 0 else s.times[k + 1] - s.times[k]
    p = np.polynomial.Polynomial(c)
    return np.array([p(tau), p.deriv(1)(tau), p.deriv(2)(tau)])


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=7), st.floats(-2, 2), st.floats(-2, 2))
@settings(max_examples=60, deadline=None)
def test_spline_defining_conditions(knots, R_i, R_f):
    """Interpolation, C2 joints, rest ends and the piece degrees fix the spline uniquely."""
    s = Spline(R_i, R_f, T_F, knots)
    values = [R_i, *knots, R_f]
    nseg = len(knots) + 1
    scale = 1 + max(map(abs, values))
    for k in range(nseg):
        assert piece_limits(s, k, 0)[0] == pytest.approx(values[k], abs=1e-10 * scale)
        assert piece_limits(s, k, 1)[0] == pytest.approx(values[k + 1], abs=1e-10 * scale)
    for k in range(nseg - 1):
        left, right = piece_limits(s, k, 1), piece_limits(s, k + 1, 0)
        assert np.allclose(left, right, atol=1e-8 * scale)
    assert np.allclose(piece_limits(s, 0, 0)[1:], 0, atol=1e-10 * scale)
    assert np.allclose(piece_limits(s, nseg - 1, 1)[1:], 0, atol=1e-8 * scale)
    if nseg > 2:
        assert np.all(s.coefs[1:-1, 4] == 0)


def test_spline_reproduces_cycloid_shape_at_knots():
    c = Cycloid(0.0, 1.0, T_F)
    t = knot_times(5, T_F)[1:-1]
    s = Spline(0.0, 1.0, T_F, c(t)[0])
    assert np.allclose(s(t)[0], c(t)[0], atol=1e-12)
    check_rest_to_rest(s, 0.0, 1.0)
    fd_check(s, np.linspace(0.05, T_F - 0.05, 23) + 1e-3)


def test_spline_batch_matches_single():
    rng = np.random.default_rng(0)
    K = rng.normal(size=(4, 5))
    batch = Spline(0.0, 1.0, T_F, K)
    t = np.linspace(0, T_F, 9)
    R = batch(t[:, None])[0]
    for i in range(4):
        assert np.allclose(R[:, i], Spline(0.0, 1.0, T_F, K[i])(t)[0], atol=1e-14)


def test_hidden_biases_even():
    assert np.allclose(hidden_biases(5, 2.0), [0, 0.5, 1.0, 1.5, 2.0])


def test_ann_closure_and_rest():
    a = np.array([2.0, 3.0, 4.0, 5.0, 6.0])
    w = np.array([0.2, 0.1, 0.3, 0.4])
    ann = Ann(-1.0, 2.0, T_F, a, w)
    assert ann.output(T_F)[0] == pytest.approx(1.0, abs=1e-14)
    assert ann.output(0.0)[0] == pytest.approx(0.0, abs=1e-14)
    check_rest_to_rest(ann, -1.0, 2.0)
    fd_check(ann, np.linspace(0.05, T_F - 0.05, 19))


@pytest.mark.parametrize("a,w", [([1.0], []), ([1.0, -1.0], [0.5]), ([1.0, 2.0], [0.5, 0.5])])
def test_ann_rejects_bad_parameters(a, w):
    with pytest.raises(TrajectoryError):
        Ann(0.0, 1.0, T_F, a, w)


def test_plan_text_roundtrip():
    plan = Plan(Ann(-math.pi / 2, 0.0, T_F, [1.0, 2, 3, 4, 5], [0.1, 0.2, 0.3, 0.4]),
                Spline(0.0, 1.0, T_F, [0.1, 0.3, 0.5, 0.7, 0.9]),
                Cycloid(0.0, 0.0, T_F))
    text = to_text(plan, {"seed": 3})
    back, header = from_text(text)
    assert header == {"seed": "3"}
    t = np.linspace(0, T_F, 31)
    for a, b in zip(plan(t), back(t)):
        assert np.array_equal(a, b)
    assert to_text(back, {"seed": 3}) == text


def test_from_text_errors():
    with pytest.raises(TrajectoryError):
        from_text("theta.family = cycloid\n")
    with pytest.raises(TrajectoryError):
        from_text("nonsense line\n")
