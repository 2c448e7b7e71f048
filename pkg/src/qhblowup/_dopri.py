"""Dormand-Prince 5(4) embedded Runge-Kutta pair with PI step-size control.

Besides the accepted states, the integrator records the increment
``y_{n+1} - y_n`` of each step as computed (before it is added), so that
quadrature components such as accumulated physical time can be summed
without cancellation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = ["DopriResult", "dopri5"]

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = _B - np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_BETA = 0.04  # PI memory term
_EXPO = 0.2 - 0.75 * _BETA


@dataclass
class DopriResult:
    t: np.ndarray
    y: np.ndarray  # shape (m, n)
    dy: np.ndarray  # shape (m - 1, n): per-step increments
    status: str  # "t_end" | "event" | "step_failure" | "nonfinite" | "max_steps"
    message: str = ""


def dopri5(
    fun: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0,
    t_end: float,
    *,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    max_step: float = np.inf,
    first_step: Optional[float] = None,
    error_mask=None,
    event: Optional[Callable[[float, np.ndarray], Optional[str]]] = None,
    max_steps: int = 1_000_000,
    min_step: float = 1e-14,
) -> DopriResult:
    """Integrate ``y' = fun(t, y)`` from ``t0`` towards ``t_end > t0``.

    ``error_mask`` selects the components that take part in error control
    (quadrature-only components can be excluded).  ``event(t, y)`` is called
    after every accepted step; a non-``None`` return stops integration with
    status ``"event"`` and that string as message.
    """
    y = np.array(y0, dtype=float)
    n = y.size
    mask = np.ones(n, dtype=bool) if error_mask is None else np.asarray(error_mask, dtype=bool)
    t = float(t0)
    ts, ys, dys = [t], [y.copy()], []
    k = np.empty((7, n))
    k[0] = fun(t, y)
    if not np.all(np.isfinite(k[0])):
        return DopriResult(np.array(ts), np.array(ys), np.zeros((0, n)), "nonfinite", "nonfinite initial derivative")
    if first_step is None:
        scale = atol + rtol * np.abs(y[mask])
        d0 = np.sqrt(np.mean((y[mask] / scale) ** 2)) if mask.any() else 0.0
        d1 = np.sqrt(np.mean((k[0][mask] / scale) ** 2)) if mask.any() else 0.0
        h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h = min(h, max_step, 0.1)
    else:
        h = float(first_step)
    err_prev = 1e-4
    status, message = "t_end", ""
    steps = 0
    while t < t_end:
        if steps >= max_steps:
            status = "max_steps"
            break
        h = min(h, t_end - t, max_step)
        if h < min_step * max(1.0, abs(t)):
            status, message = "step_failure", f"step size underflow at t={t!r}"
            break
        for s in range(1, 7):
            ys_ = y + h * np.dot(_A[s], k[:s])
            k[s] = fun(t + _C[s] * h, ys_)
        inc = h * np.dot(_B, k)
        if not np.all(np.isfinite(inc)):
            h *= 0.25
            continue
        err_vec = h * np.dot(_E, k)
        y_new = y + inc
        if mask.any():
            scale = atol + rtol * np.maximum(np.abs(y[mask]), np.abs(y_new[mask]))
            err = float(np.sqrt(np.mean((err_vec[mask] / scale) ** 2)))
        else:
            err = 0.0
        if err <= 1.0:
            steps += 1
            t_new = t + h if t_end - (t + h) > 1e-15 * max(1.0, abs(t_end)) else t_end
            dys.append(inc)
            t, y = t_new, y_new
            ts.append(t)
            ys.append(y.copy())
            k[0] = k[6]  # FSAL
            if err == 0.0:
                fac = _MAX_FACTOR
            else:
                fac = _SAFETY * err**-_EXPO * err_prev**_BETA
                fac = min(_MAX_FACTOR, max(_MIN_FACTOR, fac))
            err_prev = max(err, 1e-4)
            h *= fac
            if event is not None:
                msg = event(t, y)
                if msg is not None:
                    status, message = "event", msg
                    break
        else:
            h *= max(_MIN_FACTOR, _SAFETY * err**-0.2)
    return DopriResult(np.array(ts), np.array(ys), np.array(dys).reshape(-1, n), status, message)
