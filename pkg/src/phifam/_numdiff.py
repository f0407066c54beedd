"""Central finite differences in the parameter vector."""

from __future__ import annotations

from typing import Callable

import numpy as np

FIRST_STEP = 1e-5
SECOND_STEP = 1e-4


def step(theta: np.ndarray, k: int, rel: float = FIRST_STEP) -> float:
    return rel * max(1.0, abs(float(theta[k])))


def _shift(theta: np.ndarray, k: int, h: float) -> np.ndarray:
    out = np.array(theta, dtype=float, copy=True)
    out[k] += h
    return out


def partial(fun: Callable[[np.ndarray], np.ndarray], theta, k: int, rel: float = FIRST_STEP):
    """d fun / d theta^k by a central difference; ``fun`` may return arrays."""
    theta = np.asarray(theta, dtype=float)
    h = step(theta, k, rel)
    up = np.asarray(fun(_shift(theta, k, h)), dtype=float)
    down = np.asarray(fun(_shift(theta, k, -h)), dtype=float)
    return (up - down) / (2.0 * h)


def jacobian(fun: Callable[[np.ndarray], np.ndarray], theta, rel: float = FIRST_STEP) -> np.ndarray:
    """Matrix J[i, k] = d fun_i / d theta^k."""
    theta = np.asarray(theta, dtype=float)
    cols = [np.atleast_1d(partial(fun, theta, k, rel)) for k in range(theta.size)]
    return np.stack(cols, axis=-1)


def second_partial(fun: Callable[[np.ndarray], float], theta, k: int, l: int, rel: float = SECOND_STEP) -> float:
    """d^2 fun / d theta^k d theta^l, nested central differences with one Richardson step."""
    theta = np.asarray(theta, dtype=float)

    def estimate(scale: float) -> float:
        hk = step(theta, k, rel) * scale
        if k == l:
            f0 = float(fun(theta))
            return (float(fun(_shift(theta, k, hk))) - 2.0 * f0 + float(fun(_shift(theta, k, -hk)))) / hk**2
        hl = step(theta, l, rel) * scale
        pp = float(fun(_shift(_shift(theta, k, hk), l, hl)))
        pm = float(fun(_shift(_shift(theta, k, hk), l, -hl)))
        mp = float(fun(_shift(_shift(theta, k, -hk), l, hl)))
        mm = float(fun(_shift(_shift(theta, k, -hk), l, -hl)))
        return (pp - pm - mp + mm) / (4.0 * hk * hl)

    coarse = estimate(2.0)
    fine = estimate(1.0)
    return fine + (fine - coarse) / 3.0
