"""Limited-memory BFGS with backtracking Armijo line search."""
from __future__ import annotations

from collections import deque
from typing import Callable

import numpy as np

Objective = Callable[[np.ndarray], "tuple[float, np.ndarray]"]

ARMIJO_C = 1e-4
MAX_BACKTRACKS = 40


class NonFiniteObjective(FloatingPointError):
    pass


def two_loop(grad: np.ndarray, s_hist, y_hist) -> np.ndarray:
    """Apply the inverse-Hessian approximation to ``grad``."""
    q = grad.copy()
    alphas = []
    for s, y in zip(reversed(s_hist), reversed(y_hist)):
        rho = 1.0 / np.dot(y, s)
        a = rho * np.dot(s, q)
        q -= a * y
        alphas.append((rho, a))
    if s_hist:
        s, y = s_hist[-1], y_hist[-1]
        q *= np.dot(s, y) / np.dot(y, y)
    for (s, y), (rho, a) in zip(zip(s_hist, y_hist), reversed(alphas)):
        b = rho * np.dot(y, q)
        q += (a - b) * s
    return q


def damped_pair(s: np.ndarray, y: np.ndarray, s_hist, y_hist):
    """Curvature pair, Powell-damped when s.y <= 0.

    Armijo backtracking alone does not guarantee positive curvature (for
    instance in indefinite regions), so such pairs are blended with the
    scaled identity B0 = I / gamma used by the two-loop recursion.
    """
    ss = float(np.dot(s, s))
    if ss == 0.0:
        return None
    gamma = 1.0
    if s_hist:
        gamma = float(np.dot(s_hist[-1], y_hist[-1]) / np.dot(y_hist[-1], y_hist[-1]))
    sbs = ss / gamma
    sy = float(np.dot(s, y))
    if sy <= 0.0:
        theta = 0.8 * sbs / (sbs - sy)
        y = theta * y + (1.0 - theta) * s / gamma
    return s, y


def lbfgs_minimize(objective: Objective, start: np.ndarray, steps: int, alpha: float = 1.0,
                   memory: int = 10, gtol: float = 1e-12,
                   callback: Callable[[int, np.ndarray, float], None] | None = None) -> np.ndarray:
    """Take up to ``steps`` L-BFGS iterations and return the best iterate seen.

    Each iteration backtracks (halving) from step size ``alpha`` along the
    quasi-Newton direction until the Armijo condition holds. The returned
    array has the shape of ``start``; the objective receives arrays of that
    shape too.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    shape = np.shape(start)
    x = np.array(start, dtype=np.float64).reshape(-1)

    def f(v):
        val, g = objective(v.reshape(shape))
        return float(val), np.asarray(g, dtype=np.float64).reshape(-1)

    fx, g = f(x)
    if not np.isfinite(fx) or not np.all(np.isfinite(g)):
        raise NonFiniteObjective(f"objective is not finite at the start point ({fx})")
    s_hist: deque = deque(maxlen=memory)
    y_hist: deque = deque(maxlen=memory)
    for k in range(steps):
        if np.max(np.abs(g)) <= gtol:
            break
        d = -two_loop(g, s_hist, y_hist)
        slope = float(np.dot(g, d))
        if slope >= 0:
            # stale curvature; restart from steepest descent
            s_hist.clear()
            y_hist.clear()
            d = -g
            slope = -float(np.dot(g, g))
        t = alpha
        for _ in range(MAX_BACKTRACKS):
            x_new = x + t * d
            f_new, g_new = f(x_new)
            if np.isfinite(f_new) and f_new <= fx + ARMIJO_C * t * slope:
                break
            t *= 0.5
        else:
            break
        s = x_new - x
        y = g_new - g
        pair = damped_pair(s, y, s_hist, y_hist)
        if pair is not None:
            s_hist.append(pair[0])
            y_hist.append(pair[1])
        x, fx, g = x_new, f_new, g_new
        if callback is not None:
            callback(k, x.reshape(shape), fx)
    return x.reshape(shape)
