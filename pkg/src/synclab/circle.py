"""Small helpers for angles on the unit circle and the chain 1-norm used
by the firing-map and rotating-frame contraction certificates."""
from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi


def wrap_2pi(x):
    """Wrap angles into [0, 2*pi)."""
    return np.mod(x, TWO_PI)


def wrap_pi(x):
    """Wrap angles into (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(x), TWO_PI)


def configuration_norm(v) -> float:
    """Chain 1-norm of an ordered-configuration vector:

        |v_1| + sum_k |v_k - v_{k+1}| + |v_{N-1}|

    This is the contraction metric of the pulse-coupling results; its
    continuum analog is (twice) the total variation distance.
    """
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.size == 1:
        return 2.0 * abs(float(v[0]))
    return float(abs(v[0]) + np.sum(np.abs(np.diff(v))) + abs(v[-1]))
