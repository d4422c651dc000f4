"""Limit estimation for parameter-indexed sequences (eps, mollifier width, layer depth)."""

from __future__ import annotations

import numpy as np


def richardson(params, values, rate: float = 1.0):
    """Two-term Richardson limit at parameter 0.

    Assumes ``v(t) = v0 + C t**rate`` and eliminates ``C`` using the last two
    members of the sequence. ``values`` may hold arrays (nodal fields); the
    extrapolation acts elementwise.
    """
    t = np.asarray(params, dtype=float)
    if t.size < 2:
        raise ValueError("need at least two sequence members")
    t1, t2 = t[-2] ** rate, t[-1] ** rate
    v1 = np.asarray(values[-2], dtype=float)
    v2 = np.asarray(values[-1], dtype=float)
    return v2 + (v2 - v1) * t2 / (t1 - t2)


def polynomial_limit(params, values, degree: int | None = None):
    """Value at 0 of the interpolating polynomial through the last ``degree+1`` points.

    Neville's scheme; with three layers and ``degree=2`` this is the classical
    repeated Richardson table for an expansion in integer powers of the parameter.
    """
    t = np.asarray(params, dtype=float)
    n = t.size if degree is None else degree + 1
    if n > t.size:
        raise ValueError("not enough sequence members for the requested degree")
    t = t[-n:]
    p = [np.asarray(v, dtype=float) for v in values[-n:]]
    for level in range(1, n):
        p = [
            (t[i + level] * p[i] - t[i] * p[i + 1]) / (t[i + level] - t[i])
            for i in range(n - level)
        ]
    return p[0]


def observed_rate(params, values) -> float:
    """Empirical convergence order from three consecutive members."""
    t = np.asarray(params, dtype=float)[-3:]
    v = np.asarray(values, dtype=float)[-3:]
    d1, d2 = abs(v[1] - v[0]), abs(v[2] - v[1])
    if d1 == 0.0 or d2 == 0.0:
        return float("inf")
    return float(np.log(d1 / d2) / np.log(t[0] / t[1]))
