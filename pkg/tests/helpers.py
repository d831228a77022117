"""Shared test helpers."""
import math

import numpy as np


def random_states(rng, n, q_max=0.4):
    """Random in-bound states (q, R, qdot, Rdot) as rows of length 8."""
    y = np.empty((n, 8))
    y[:, 0] = rng.uniform(-q_max, q_max, n)
    y[:, 1] = rng.uniform(-math.pi, math.pi, n)
    y[:, 2:4] = rng.uniform(-2, 2, (n, 2))
    y[:, 4:] = rng.uniform(-3, 3, (n, 4))
    return y
