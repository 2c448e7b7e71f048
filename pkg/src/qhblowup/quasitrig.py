"""(1, l)-trigonometric functions.

``Cs`` and ``Sn`` solve ``Cs' = -Sn``, ``Sn' = Cs**(2l-1)`` with
``Cs(0) = 1``, ``Sn(0) = 0``; they satisfy ``Cs**(2l) + l*Sn**2 = 1`` and
are periodic.  For ``l = 1`` they are ``cos`` and ``sin``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import BPoly

from .errors import InputError, NumericError

__all__ = ["QuasiTrigTable", "build_table", "cs_sn", "get_table"]

_RTOL = 1e-13
_ATOL = 1e-15


def _rhs(l: int):
    def f(_theta, z):
        return [-z[1], z[0] ** (2 * l - 1)]

    return f


def _flow(l: int, z0, theta0: float, theta1: float) -> np.ndarray:
    if theta1 == theta0:
        return np.asarray(z0, dtype=float)
    sol = solve_ivp(_rhs(l), (theta0, theta1), z0, method="DOP853", rtol=_RTOL, atol=_ATOL)
    if not sol.success:
        raise NumericError(f"quasi-trig integration failed: {sol.message}")
    return sol.y[:, -1]


@dataclass(frozen=True)
class QuasiTrigTable:
    l: int
    period: float
    theta: np.ndarray
    cs: np.ndarray
    sn: np.ndarray
    order: int = 5

    def __post_init__(self) -> None:
        # quintic Hermite interpolation: values, first and second derivatives are
        # all available in closed form from the defining ODE
        l, cs, sn = self.l, self.cs, self.sn
        d1cs, d1sn = -sn, cs ** (2 * l - 1)
        d2cs = -d1sn
        d2sn = (2 * l - 1) * cs ** (2 * l - 2) * d1cs
        object.__setattr__(self, "_cs_spline", BPoly.from_derivatives(self.theta, np.stack([cs, d1cs, d2cs], 1)))
        object.__setattr__(self, "_sn_spline", BPoly.from_derivatives(self.theta, np.stack([sn, d1sn, d2sn], 1)))

    def __call__(self, theta):
        return cs_sn(self, theta)

    def identity_residual(self) -> float:
        return float(np.max(np.abs(self.cs ** (2 * self.l) + self.l * self.sn**2 - 1.0)))

    def angle_of(self, cs: float, sn: float) -> float:
        """Angle in ``[0, period)`` with ``(Cs, Sn) = (cs, sn)`` (point on the quasi-circle)."""
        l = self.l
        d = (self.cs - cs) ** 2 + l * (self.sn - sn) ** 2
        th = float(self.theta[int(np.argmin(d))])
        for _ in range(50):
            c, s = cs_sn(self, th)
            # tangent (-s, c^(2l-1)); project the residual onto it
            tx, ty = -s, c ** (2 * l - 1)
            step = ((cs - c) * tx + (sn - s) * ty) / (tx * tx + ty * ty)
            th += step
            if abs(step) < 1e-15:
                break
        return float(th % self.period)


def _find_period(l: int) -> float:
    # march in coarse steps until Sn changes sign from negative to >= 0 with Cs > 0
    h = 0.05
    theta, z = 0.0, np.array([1.0, 0.0])
    theta_prev, z_prev = theta, z
    for _ in range(100000):
        theta_prev, z_prev = theta, z
        z = _flow(l, z, theta, theta + h)
        theta += h
        if theta > h and z_prev[1] < 0.0 <= z[1] and z[0] > 0:
            break
    else:
        raise NumericError("no first return found for quasi-trig flow")
    lo, hi = theta_prev, theta
    zlo = z_prev
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        zm = _flow(l, zlo, lo, mid)
        if zm[1] < 0.0:
            lo, zlo = mid, zm
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    th = 0.5 * (lo + hi)
    zt = _flow(l, zlo, lo, th)
    for _ in range(5):
        step = zt[1] / zt[0] ** (2 * l - 1)
        if abs(step) < 1e-16:
            break
        zt = _flow(l, zt, th, th - step)
        th -= step
    return th


def build_table(l: int, samples_per_period: int = 512) -> QuasiTrigTable:
    l = int(l)
    if l < 1:
        raise InputError("l must be >= 1")
    if samples_per_period < 64:
        raise InputError("samples_per_period must be >= 64")
    period = _find_period(l)
    theta = np.linspace(0.0, period, samples_per_period + 1)
    # integrate the half-periods from each end towards the middle for symmetric accuracy
    sol = solve_ivp(_rhs(l), (0.0, period), [1.0, 0.0], method="DOP853", rtol=_RTOL, atol=_ATOL,
                    t_eval=theta, dense_output=False)
    if not sol.success:
        raise NumericError(f"quasi-trig integration failed: {sol.message}")
    cs, sn = sol.y[0].copy(), sol.y[1].copy()
    # renormalize onto the invariant curve and close the period exactly
    cs[-1], sn[-1] = 1.0, 0.0
    return QuasiTrigTable(l=l, period=period, theta=theta, cs=cs, sn=sn)


@lru_cache(maxsize=16)
def get_table(l: int, samples_per_period: int = 1024) -> QuasiTrigTable:
    return build_table(l, samples_per_period)


def cs_sn(table: QuasiTrigTable, theta):
    """Interpolated ``(Cs(theta), Sn(theta))``, periodically extended."""
    t = np.mod(np.asarray(theta, dtype=float), table.period)
    c = table._cs_spline(t)
    s = table._sn_spline(t)
    if np.ndim(theta) == 0:
        return float(c), float(s)
    return c, s
