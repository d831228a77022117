import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flexarm.pso import (SwarmConfig, SwarmError, constriction_factor, optimize, preset,
                         update, update_matrix, write_checkpoint)


def sphere(x):
    return float(np.sum(np.asarray(x) ** 2))


def test_constriction_canonical():
    assert constriction_factor(2.05, 2.05) == pytest.approx(0.7298437881, abs=1e-9)
    assert constriction_factor(1.0, 3.5) == 0.5


def test_constriction_requires_phi_above_four():
    with pytest.raises(SwarmError):
        constriction_factor(2.0, 2.0)
    with pytest.raises(SwarmError):
        SwarmConfig(lower=[0.0], upper=[1.0], c1=1.0, c2=1.0)


def test_update_by_hand():
    x, v = np.array([1.0]), np.array([0.5])
    p, g = np.array([2.0]), np.array([3.0])
    x2, v2 = update(x, v, p, g, np.array([0.25]), np.array([0.5]), chi=0.5, c1=2.0, c2=2.0)
    # v = 0.5 * (0.5 + 2 * 0.25 * 1 + 2 * 0.5 * 2) = 1.5
    assert v2[0] == pytest.approx(1.5) and x2[0] == pytest.approx(2.5)


@pytest.mark.parametrize("name", ["canonical", "paper"])
def test_presets_are_contractive(name):
    cfg = preset(name, [0.0], [1.0])
    phi = cfg.c1 + cfg.c2
    rho = max(abs(np.linalg.eigvals(update_matrix(cfg.constriction, phi, cfg.weight))))
    assert rho < 1


def test_sphere_converges():
    cfg = SwarmConfig(lower=[-5.0] * 10, upper=[5.0] * 10, particles=30, iterations=200,
                      seed=1, window=200)
    res = optimize(sphere, cfg)
    assert res.cost < 1e-6
    assert np.all(np.diff(res.history) <= 0)


@given(st.integers(0, 2 ** 31))
@settings(max_examples=10, deadline=None)
def test_history_monotone_and_deterministic(seed):
    cfg = SwarmConfig(lower=[-3.0] * 3, upper=[3.0] * 3, particles=8, iterations=25, seed=seed)
    f = lambda x: sphere(x) + math.sin(5 * x[0])
    a, b = optimize(f, cfg), optimize(f, cfg)
    assert np.all(np.diff(a.history) <= 0)
    assert np.array_equal(a.history, b.history) and np.array_equal(a.x, b.x)
    assert np.all(a.x >= -3) and np.all(a.x <= 3)


def test_vectorized_matches_scalar():
    cfg = SwarmConfig(lower=[-2.0] * 4, upper=[2.0] * 4, particles=10, iterations=30, seed=5)
    a = optimize(sphere, cfg)
    b = optimize(lambda X: np.sum(X ** 2, axis=1), cfg, vectorized=True)
    assert np.array_equal(a.history, b.history)


def test_nonfinite_costs_resampled():
    calls = {"n": 0}

    def f(x):
        calls["n"] += 1
        return math.inf if x[0] > 0.5 else sphere(x)

    res = optimize(f, SwarmConfig(lower=[-1.0, -1.0], upper=[1.0, 1.0], particles=10,
                                  iterations=10, seed=2))
    assert res.resampled > 0 and math.isfinite(res.cost)
    assert res.evaluations == calls["n"]


def test_all_infinite_raises():
    with pytest.raises(SwarmError):
        optimize(lambda x: math.inf, SwarmConfig(lower=[0.0], upper=[1.0], particles=3,
                                                 iterations=2, max_resample=1))


def test_checkpoint_every_and_file(tmp_path):
    seen = []
    cfg = SwarmConfig(lower=[-1.0], upper=[1.0], particles=5, iterations=25, seed=0,
                      window=100, checkpoint_every=10)
    res = optimize(sphere, cfg, on_checkpoint=lambda s: seen.append(s.iteration))
    assert seen == [10, 20]
    path = tmp_path / "ck.txt"
    write_checkpoint(path, res.state, cfg.seed, ["a"])
    text = path.read_text()
    assert "seed = 0" in text and "best.a = " in text


def test_bounds_validation():
    with pytest.raises(SwarmError):
        SwarmConfig(lower=[1.0], upper=[0.0])
