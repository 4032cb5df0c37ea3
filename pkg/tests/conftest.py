"""Shared test oracles: finite differences and error metrics.

The finite-difference helpers differentiate objective *values* only, so they
stay independent of the analytic gradients and Hessians they check.
"""

from __future__ import annotations

import numpy as np


def fd_gradient(value_fn, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar function of a vector."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        grad[i] = (value_fn(x + e) - value_fn(x - e)) / (2.0 * h)
    return grad


def fd_hessian(value_fn, x: np.ndarray, h: float = 1e-4) -> np.ndarray:
    """Central second differences of a scalar function of a vector."""
    x = np.asarray(x, dtype=float)
    p = x.size
    hess = np.zeros((p, p))
    for i in range(p):
        ei = np.zeros(p)
        ei[i] = h
        for j in range(i, p):
            ej = np.zeros(p)
            ej[j] = h
            hess[i, j] = (
                value_fn(x + ei + ej)
                - value_fn(x + ei - ej)
                - value_fn(x - ei + ej)
                + value_fn(x - ei - ej)
            ) / (4.0 * h * h)
            hess[j, i] = hess[i, j]
    return hess


def rel_err(actual, expected) -> float:
    a = np.asarray(actual, dtype=float)
    b = np.asarray(expected, dtype=float)
    denom = max(float(np.max(np.abs(b))), 1.0)
    return float(np.max(np.abs(a - b))) / denom


def random_spd(rng: np.random.Generator, p: int, floor: float = 0.1) -> np.ndarray:
    g = rng.standard_normal((p, p))
    return g @ g.T + floor * np.eye(p)
