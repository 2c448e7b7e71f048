"""Quasi-Poincare compactification and directional charts.

The global chart sends ``y`` to ``x_i = y_i / kappa(y)**alpha_i`` with
``kappa = (1 + sum a_i y_i**(2 beta_i))**(1/2c)``; infinity becomes the
horizon ``p(x) = 1``.  Directional (hyperplane) charts write
``y_i = sign * s**-alpha_i`` and ``y_j = theta_j * s**-alpha_j`` for
``j != i``, with the horizon at ``s = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import ChartDomainError, HorizonError, InputError

__all__ = [
    "HORIZON_TOL",
    "CompactScheme",
    "GlobalPoint",
    "DirectionalPoint",
    "make_scheme",
    "power_sum",
    "p_functional",
    "kappa",
    "grad_kappa",
    "compactify",
    "decompactify",
    "inverse_kappa",
    "radicand",
    "global_point",
    "dir_compactify",
    "dir_decompactify",
    "chart_to_global",
    "global_to_chart",
    "project_to_horizon",
    "iota_symmetry",
]

HORIZON_TOL = 1e-12


@dataclass(frozen=True)
class CompactScheme:
    alpha: tuple[int, ...]
    a: tuple[float, ...]
    beta: tuple[int, ...]
    c: int
    index_set: tuple[int, ...]
    k: int = 0

    @property
    def dimension(self) -> int:
        return len(self.alpha)

    def to_json(self) -> dict:
        return {"alpha": list(self.alpha), "a": list(self.a), "k": self.k}


def make_scheme(alpha: Sequence[int], a: Sequence[float] | None = None, k: int = 0) -> CompactScheme:
    alpha = tuple(int(v) for v in alpha)
    if any(v < 0 for v in alpha):
        raise InputError("type entries must be nonnegative")
    index_set = tuple(i for i, v in enumerate(alpha) if v > 0)
    if not index_set:
        raise InputError("type must have at least one positive entry")
    if a is None:
        a = (1.0,) * len(alpha)
    a = tuple(float(v) for v in a)
    if len(a) != len(alpha):
        raise InputError("weights a and type alpha differ in length")
    if any(a[i] < 1.0 for i in index_set):
        raise InputError("weights a_i must be >= 1 on the homogeneity indices")
    if int(k) < 0:
        raise InputError("k must be nonnegative")
    c = reduce(lambda u, v: u * v // math.gcd(u, v), (alpha[i] for i in index_set))
    beta = tuple(c // v if v > 0 else 0 for v in alpha)
    return CompactScheme(alpha=alpha, a=a, beta=beta, c=c, index_set=index_set, k=int(k))


def _as_vec(scheme: CompactScheme, y) -> np.ndarray:
    y = np.asarray(y)
    if y.dtype.kind not in "fc":
        y = y.astype(float)
    if y.shape != (scheme.dimension,):
        raise InputError(f"expected a vector of length {scheme.dimension}, got shape {y.shape}")
    return y


def power_sum(scheme: CompactScheme, y) -> float | complex:
    """``sum_{i in I} a_i y_i**(2 beta_i)`` (``p**2c``), via squaring for exact symmetry."""
    y = _as_vec(scheme, y)
    total = 0.0
    for i in scheme.index_set:
        half = y[i] ** scheme.beta[i]
        total = total + scheme.a[i] * half * half
    return total


def p_functional(scheme: CompactScheme, y) -> float:
    return float(power_sum(scheme, y)) ** (1.0 / (2 * scheme.c))


def kappa(scheme: CompactScheme, y) -> float:
    return (1.0 + float(power_sum(scheme, y))) ** (1.0 / (2 * scheme.c))


def grad_kappa(scheme: CompactScheme, y) -> np.ndarray:
    """Closed-form gradient ``beta_j a_j y_j**(2 beta_j - 1) / (c kappa**(2c-1))``."""
    y = _as_vec(scheme, y).astype(float)
    kap = kappa(scheme, y)
    g = np.zeros_like(y)
    for j in scheme.index_set:
        b = scheme.beta[j]
        g[j] = b * scheme.a[j] * y[j] ** (2 * b - 1) / (scheme.c * kap ** (2 * scheme.c - 1))
    return g


def compactify(scheme: CompactScheme, y) -> np.ndarray:
    y = _as_vec(scheme, y).astype(float)
    kap = kappa(scheme, y)
    return np.array([y[i] / kap ** scheme.alpha[i] for i in range(scheme.dimension)])


def radicand(scheme: CompactScheme, x, tol: float = HORIZON_TOL):
    """``1 - p(x)**2c`` (equal to ``kappa**-2c`` in the global chart).

    Values in ``[-tol, 0)`` are clamped to zero; anything below raises.
    """
    w = 1.0 - power_sum(scheme, x)
    if np.iscomplexobj(w):
        if w.real < -tol:
            raise HorizonError(f"point lies outside the closed disc (1 - p^2c = {w.real:.3e})")
        return w
    if w < 0.0:
        if w < -tol:
            raise HorizonError(f"point lies outside the closed disc (1 - p^2c = {w:.3e})")
        return 0.0
    return w


def inverse_kappa(scheme: CompactScheme, x, tol: float = HORIZON_TOL):
    """``kappa(T^{-1}(x))**-1`` computed from the global coordinate, zero on the horizon."""
    return radicand(scheme, x, tol) ** (1.0 / (2 * scheme.c))


def decompactify(scheme: CompactScheme, x) -> np.ndarray:
    x = np.asarray(getattr(x, "x", x), dtype=float)
    x = _as_vec(scheme, x)
    w = 1.0 - float(power_sum(scheme, x))
    if w <= 0.0:
        raise HorizonError("point on (or beyond) the horizon has no finite preimage")
    kap = w ** (-1.0 / (2 * scheme.c))
    return np.array([kap ** scheme.alpha[i] * x[i] for i in range(scheme.dimension)])


@dataclass(frozen=True)
class GlobalPoint:
    x: np.ndarray
    on_horizon: bool

    def __iter__(self):
        return iter(self.x)


def global_point(scheme: CompactScheme, x, tol: float = HORIZON_TOL) -> GlobalPoint:
    x = _as_vec(scheme, np.asarray(x, dtype=float))
    p = p_functional(scheme, x)
    if p > 1.0 + tol:
        raise HorizonError(f"p(x) = {p!r} exceeds 1")
    return GlobalPoint(x=x.copy(), on_horizon=abs(p - 1.0) <= tol)


@dataclass(frozen=True)
class DirectionalPoint:
    chart_index: int
    chart_sign: int
    s: float
    theta: np.ndarray

    def state(self) -> np.ndarray:
        return np.concatenate(([self.s], self.theta))

    @classmethod
    def from_state(cls, chart_index: int, chart_sign: int, z) -> "DirectionalPoint":
        z = np.asarray(z, dtype=float)
        return cls(chart_index, chart_sign, float(z[0]), z[1:].copy())


def _check_chart(scheme: CompactScheme, i: int, sign: int) -> None:
    if i not in scheme.index_set:
        raise InputError(f"chart index {i} is not a homogeneity index")
    if sign not in (1, -1):
        raise InputError("chart sign must be +1 or -1")


def chart_h(scheme: CompactScheme, i: int, sign: int, theta) -> np.ndarray:
    """Direction vector ``h`` of a hyperplane chart: ``h_i = sign``, others ``theta``."""
    theta = np.asarray(theta)
    h = np.empty(scheme.dimension, dtype=np.result_type(theta.dtype, float))
    h[i] = sign
    h[np.arange(scheme.dimension) != i] = theta
    return h


def dir_compactify(scheme: CompactScheme, i: int, sign: int, y) -> DirectionalPoint:
    _check_chart(scheme, i, sign)
    y = _as_vec(scheme, y).astype(float)
    if sign * y[i] <= 0.0:
        raise ChartDomainError(f"sign*y[{i}] must be positive for this chart")
    s = (sign * y[i]) ** (-1.0 / scheme.alpha[i])
    theta = np.array([y[j] * s ** scheme.alpha[j] for j in range(scheme.dimension) if j != i])
    return DirectionalPoint(i, sign, s, theta)


def dir_decompactify(scheme: CompactScheme, dp: DirectionalPoint) -> np.ndarray:
    _check_chart(scheme, dp.chart_index, dp.chart_sign)
    if dp.s <= 0.0:
        raise HorizonError("s = 0 is the horizon; no finite preimage")
    h = chart_h(scheme, dp.chart_index, dp.chart_sign, dp.theta)
    return np.array([h[j] * dp.s ** (-scheme.alpha[j]) for j in range(scheme.dimension)])


def chart_to_global(scheme: CompactScheme, dp: DirectionalPoint) -> np.ndarray:
    _check_chart(scheme, dp.chart_index, dp.chart_sign)
    if dp.s < 0.0:
        raise ChartDomainError("s must be nonnegative")
    h = chart_h(scheme, dp.chart_index, dp.chart_sign, dp.theta)
    H = float(power_sum(scheme, h))
    base = dp.s ** (2 * scheme.c) + H
    return np.array([h[j] * base ** (-scheme.alpha[j] / (2 * scheme.c)) for j in range(scheme.dimension)])


def global_to_chart(scheme: CompactScheme, x, i: int, sign: int, tol: float = 1e-10) -> DirectionalPoint:
    _check_chart(scheme, i, sign)
    x = _as_vec(scheme, np.asarray(getattr(x, "x", x), dtype=float))
    if sign * x[i] <= 0.0:
        raise ChartDomainError(f"sign*x[{i}] must be positive for this chart")
    # s*kappa is finite up to the horizon
    skap = (sign * x[i]) ** (-1.0 / scheme.alpha[i])
    s = skap * float(radicand(scheme, x, tol)) ** (1.0 / (2 * scheme.c))
    theta = np.array([skap ** scheme.alpha[j] * x[j] for j in range(scheme.dimension) if j != i])
    return DirectionalPoint(i, sign, s, theta)


def project_to_horizon(scheme: CompactScheme, x) -> np.ndarray:
    """Slide ``x`` along its quasi-homogeneous ray onto ``p = 1``."""
    x = _as_vec(scheme, np.asarray(x, dtype=float))
    p = p_functional(scheme, x)
    if p == 0.0:
        raise InputError("cannot project the origin of the homogeneity block")
    return np.array([x[i] / p ** scheme.alpha[i] for i in range(scheme.dimension)])


def iota_symmetry(scheme: CompactScheme, x) -> np.ndarray:
    x = _as_vec(scheme, np.asarray(getattr(x, "x", x), dtype=float))
    signs = np.array([(-1.0) ** a for a in scheme.alpha])
    return signs * x
