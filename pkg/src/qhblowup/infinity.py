"""Invariant sets on the horizon: equilibria, their linearization, and cycles.

Polynomial sources are searched in the global chart with the augmented
system ``{g(x) = 0, p(x)**2c = 1}`` (solved by damped least-squares Newton),
then re-expressed and linearized in the chart carried by the field.
Explicit directional fields are searched directly on ``{s = 0}``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import compactify as cp
from .desing import (
    GLOBAL,
    Chart,
    DesingField,
    g_global,
    horizon_field,
    quasi_polar_rhs,
    to_natural,
)
from .errors import ChartError, NotACycleError, NumericError, UnsupportedError
from .qhfield import check_c1_extension

__all__ = [
    "HorizonEquilibrium",
    "HorizonCycle",
    "find_horizon_equilibria",
    "linearize",
    "eigenvalues",
    "classify",
    "predict_blowup_exponents",
    "iota_symmetry",
    "horizon_cycle_analysis",
    "horizon_seeds",
    "quasi_polar_angle",
]

EQ_TOL = 1e-10
DEDUP_RADIUS = 1e-8
# Newton only resolves multiple (nonhyperbolic) roots to ~sqrt(machine eps), so two
# nonhyperbolic roots closer than this are reported once
DEGENERATE_RADIUS = 1e-6
NONZERO_THRESHOLD = 1e-8
FD_STEP = 1e-6
CS_STEP = 1e-30

iota_symmetry = cp.iota_symmetry


@dataclass
class HorizonEquilibrium:
    location: np.ndarray  # global-chart point (may be None for explicit fields)
    chart: Chart
    chart_location: np.ndarray  # natural-order chart coordinates
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    classification: str
    n_s: int
    n_u: int
    blowup_exponents: tuple = ()
    norm_exponent: Optional[Fraction] = None
    residual: float = 0.0
    label: str = ""

    @property
    def hyperbolic(self) -> bool:
        return self.classification != "nonhyperbolic"

    def to_json(self) -> dict:
        def num(v):
            return None if v is None else float(v)

        return {
            "label": self.label,
            "location": None if self.location is None else [float(v) for v in self.location],
            "chart": self.chart.label(),
            "chart_location": [float(v) for v in self.chart_location],
            "eigenvalues": [[float(np.real(e)), float(np.imag(e))] for e in self.eigenvalues],
            "classification": self.classification,
            "jacobian": [[float(v) for v in row] for row in self.jacobian],
            "blowup_exponents": [None if e is None else str(e) for e in self.blowup_exponents],
            "norm_exponent": None if self.norm_exponent is None else str(self.norm_exponent),
            "residual": num(self.residual),
        }


@dataclass
class HorizonCycle:
    section: float  # angle of the Poincare section {theta = section}
    period_theta: float
    period_tau: float
    alpha_T: float  # integral of (d g_r/d r) / (d theta / d tau) over one angular period
    multiplier: float  # e^{alpha_T}
    flow_multiplier: float  # radial return-map multiplier along the flow direction
    orientation: int  # sign of d theta / d tau
    classification: str  # attracting | repelling | nonhyperbolic
    refinement_error: float
    return_residual: float
    margin: float
    multipliers: tuple = dc_field(default=())

    def to_json(self) -> dict:
        return {
            "section": self.section,
            "period_theta": self.period_theta,
            "period_tau": self.period_tau,
            "alpha_T": self.alpha_T,
            "multiplier": self.multiplier,
            "flow_multiplier": self.flow_multiplier,
            "orientation": self.orientation,
            "classification": self.classification,
            "refinement_error": self.refinement_error,
            "return_residual": self.return_residual,
        }


# ----------------------------------------------------------------------
# eigenvalues and classification
def eigenvalues(J) -> np.ndarray:
    """Closed form for 2x2 matrices (triangular ones return their diagonal in
    order); LAPACK via numpy otherwise."""
    J = np.asarray(J, dtype=float)
    if J.shape == (1, 1):
        return J[0].astype(complex)
    if J.shape == (2, 2):
        a, b, c, d = J[0, 0], J[0, 1], J[1, 0], J[1, 1]
        if b == 0.0 or c == 0.0:
            return np.array([a, d], dtype=complex)
        half_tr = 0.5 * (a + d)
        root = cmath.sqrt(0.25 * (a - d) ** 2 + b * c)
        ev = sorted([half_tr - root, half_tr + root], key=lambda z: (z.real, z.imag))
        return np.array(ev, dtype=complex)
    return np.linalg.eigvals(J).astype(complex)


def classify(eigs: Sequence[complex], margin: float = 1e-6) -> tuple[str, int, int]:
    """Return ``(label, n_s, n_u)``; label is sink/source/saddle(n_s,n_u)/nonhyperbolic."""
    if margin <= 0:
        raise ValueError("margin must be positive")
    re = np.real(np.asarray(eigs, dtype=complex))
    n_s = int(np.sum(re < -margin))
    n_u = int(np.sum(re > margin))
    if n_s + n_u < re.size:
        return "nonhyperbolic", n_s, n_u
    if n_u == 0:
        return "sink", n_s, n_u
    if n_s == 0:
        return "source", n_s, n_u
    return f"saddle({n_s},{n_u})", n_s, n_u


# ----------------------------------------------------------------------
# Jacobians
def _complex_step_jac(fun, z: np.ndarray) -> np.ndarray:
    n = z.size
    J = np.empty((n, n))
    for j in range(n):
        zc = z.astype(complex)
        zc[j] += 1j * CS_STEP
        J[:, j] = np.imag(fun(zc)) / CS_STEP
    return J


def _central_jac(fun, z: np.ndarray) -> np.ndarray:
    n = z.size
    f0 = np.asarray(fun(z))
    J = np.empty((f0.size, n))
    for j in range(n):
        h = FD_STEP * (1.0 + abs(z[j]))
        zp, zm = z.copy(), z.copy()
        zp[j] += h
        zm[j] -= h
        J[:, j] = (np.asarray(fun(zp)) - np.asarray(fun(zm))) / (2 * h)
    return J


def _quasi_polar_jac(field: DesingField, r: float, C: float, S: float) -> np.ndarray:
    l = field.chart.l
    J = np.empty((2, 2))
    J[:, 0] = np.imag(quasi_polar_rhs(field, r + 1j * CS_STEP, C, S)) / CS_STEP
    # theta-derivative along the tangent (-Sn, Cs^(2l-1)) of the quasi-circle
    Cc = C - 1j * CS_STEP * S
    Sc = S + 1j * CS_STEP * C ** (2 * l - 1)
    J[:, 1] = np.imag(quasi_polar_rhs(field, r, Cc, Sc)) / CS_STEP
    return J


def quasi_polar_angle(field: DesingField, x) -> tuple[float, float, float]:
    """``(theta, Cs, Sn)`` of the quasi-polar direction through horizon point ``x``."""
    from .quasitrig import get_table

    l = field.chart.l
    x = np.asarray(x, dtype=float)
    lam = (x[0] ** (2 * l) + l * x[1] ** 2) ** (-1.0 / (2 * l))
    C, S = lam * x[0], lam**l * x[1]
    table = get_table(l)
    return table.angle_of(C, S), C, S


def linearize(field: DesingField, location, chart: Chart | None = None) -> np.ndarray:
    """Jacobian of the chart field at ``location`` (natural-order chart coordinates,
    or a global point when the chart is global).

    For quasi-polar charts ``location`` may be ``(r, theta)`` or
    ``(r, Cs, Sn)``; the latter avoids table interpolation.
    """
    if chart is not None and chart != field.chart:
        field = field.with_chart(chart)
    z = np.asarray(location, dtype=float)
    kind = field.chart.kind
    if field.explicit is not None:
        jac = getattr(field.explicit, "jacobian", None)
        if jac is not None:
            return field.sign * np.asarray(jac(z), dtype=float)
        return _central_jac(field, z)
    if kind == "global":
        on_horizon = abs(float(cp.power_sum(field.scheme, z)) - 1.0) <= 1e-8
        if on_horizon and not check_c1_extension(field.sig, field.scheme):
            raise ChartError("global chart is not C^1 on the horizon for this field; use a directional chart")
        if field.max_deficit == 0:
            return _complex_step_jac(lambda v: g_global(field, v), z)
        return _central_jac(lambda v: g_global(field, v), z)
    if kind == "directional":
        return _complex_step_jac(field, z)
    if z.size == 3:
        return _quasi_polar_jac(field, z[0], z[1], z[2])
    from .quasitrig import get_table

    C, S = get_table(field.chart.l)(z[1])
    return _quasi_polar_jac(field, z[0], C, S)


# ----------------------------------------------------------------------
# equilibrium search
def horizon_seeds(scheme: cp.CompactScheme, count: int = 256, rng_seed: int | None = None) -> np.ndarray:
    n = scheme.dimension
    if n == 1:
        pts = np.array([[1.0], [-1.0]])
    elif n == 2:
        phi = 2 * np.pi * (np.arange(count) + 0.5) / count
        pts = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    else:
        from scipy.stats import qmc

        pts = 2.0 * qmc.Halton(d=n, scramble=False).random(count + 1)[1:] - 1.0
    out = []
    for v in pts:
        try:
            out.append(cp.project_to_horizon(scheme, v))
        except Exception:
            continue
    out = np.array(out)
    if rng_seed is not None:
        np.random.default_rng(rng_seed).shuffle(out)
    return out


def _horizon_residual(field: DesingField, x) -> np.ndarray:
    return np.concatenate([horizon_field(field, x, tol=np.inf), [cp.power_sum(field.scheme, x) - 1.0]])


def _newton_horizon(field: DesingField, x0: np.ndarray, max_iter: int = 60) -> Optional[np.ndarray]:
    x = np.array(x0, dtype=float)
    fun = lambda v: _horizon_residual(field, v)  # noqa: E731
    r = np.real(fun(x))
    nr = np.linalg.norm(r)
    for _ in range(max_iter):
        if nr < 1e-15:
            break
        n = x.size
        J = np.empty((n + 1, n))
        for j in range(n):
            xc = x.astype(complex)
            xc[j] += 1j * CS_STEP
            J[:, j] = np.imag(fun(xc)) / CS_STEP
        step = np.linalg.lstsq(J, -r, rcond=None)[0]
        lam = 1.0
        while lam > 1e-4:
            xn = x + lam * step
            rn = np.real(fun(xn))
            if np.linalg.norm(rn) < nr:
                break
            lam *= 0.5
        else:
            break
        if np.linalg.norm(xn - x) < 1e-16:
            x, r, nr = xn, rn, np.linalg.norm(rn)
            break
        x, r, nr = xn, rn, np.linalg.norm(rn)
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > 1e3:
            return None
    return x


def _newton_directional(field: DesingField, z0: np.ndarray, max_iter: int = 60) -> Optional[np.ndarray]:
    """Newton on the theta-components of the chart field restricted to ``s = 0``."""
    i = field.chart.index
    z = np.array(z0, dtype=float)
    z[i] = 0.0
    free = [j for j in range(z.size) if j != i]

    def red(th):
        w = z.copy()
        w[free] = th
        return np.asarray(field(w), dtype=float)[free]

    th = z[free].copy()
    for _ in range(max_iter):
        r = red(th)
        if np.linalg.norm(r) < 1e-15:
            break
        J = _central_jac(red, th)
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            return None
        lam = 1.0
        while lam > 1e-4 and np.linalg.norm(red(th + lam * step)) >= np.linalg.norm(r):
            lam *= 0.5
        th = th + lam * step
        if not np.all(np.isfinite(th)):
            return None
        if np.linalg.norm(lam * step) < 1e-15:
            break
    z[free] = th
    return z


def _dedupe(points: list[np.ndarray]) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for p in points:
        if all(np.linalg.norm(p - q) > DEDUP_RADIUS for q in out):
            out.append(p)
    out.sort(key=lambda v: tuple(np.round(v, 9)))
    return out


def _finish(field: DesingField, x_global, chart_loc, J, margin: float, label: str, residual: float,
            direction: str = "forward") -> HorizonEquilibrium:
    ev = eigenvalues(J)
    cls, n_s, n_u = classify(ev, margin)
    eq = HorizonEquilibrium(
        location=None if x_global is None else np.asarray(x_global, dtype=float),
        chart=field.chart,
        chart_location=np.asarray(chart_loc, dtype=float),
        jacobian=J,
        eigenvalues=ev,
        classification=cls,
        n_s=n_s,
        n_u=n_u,
        residual=residual,
        label=label,
    )
    if eq.hyperbolic and eq.location is not None and (n_s > 0 or n_u > 0):
        exps, norm = predict_blowup_exponents(field.scheme, eq, "forward" if n_s > 0 else "backward")
        eq.blowup_exponents, eq.norm_exponent = exps, norm
    return eq


def find_horizon_equilibria(
    field: DesingField,
    seeds=None,
    *,
    margin: float = 1e-6,
    theta_range: Optional[Sequence[tuple[float, float]]] = None,
    n_seeds: int = 256,
    rng_seed: int | None = None,
) -> list[HorizonEquilibrium]:
    """Locate, linearize and classify the equilibria on the horizon."""
    if field.explicit is not None:
        return _find_explicit(field, seeds, margin, theta_range, n_seeds)
    scheme = field.scheme
    gfield = field if field.chart.kind == "global" else field.with_chart(GLOBAL)
    if seeds is None:
        seeds = horizon_seeds(scheme, n_seeds, rng_seed)
    roots = []
    for x0 in np.atleast_2d(np.asarray(seeds, dtype=float)):
        x = _newton_horizon(gfield, x0)
        if x is None:
            continue
        if abs(float(cp.power_sum(scheme, x)) - 1.0) > EQ_TOL:
            continue
        if np.linalg.norm(horizon_field(gfield, x, tol=1e-9)) > EQ_TOL:
            continue
        roots.append(x)
    # close the set under the iota symmetry
    for x in list(roots):
        y = _newton_horizon(gfield, iota_symmetry(scheme, x))
        if y is not None and np.linalg.norm(horizon_field(gfield, y, tol=1e-9)) <= EQ_TOL:
            roots.append(y)
    roots = _dedupe(roots)
    out = []
    for idx, x in enumerate(roots):
        resid = float(np.linalg.norm(horizon_field(gfield, x, tol=1e-9)))
        kind = field.chart.kind
        if kind == "global":
            loc, J = x, linearize(field, x)
        elif kind == "directional":
            i, sg = field.chart.index, field.chart.sign
            if sg * x[i] <= NONZERO_THRESHOLD:
                continue
            loc = to_natural(cp.global_to_chart(scheme, x, i, sg))
            loc[i] = 0.0
            J = linearize(field, loc)
        else:
            theta, C, S = quasi_polar_angle(field, x)
            loc = np.array([0.0, theta])
            J = linearize(field, [0.0, C, S])
        out.append(_finish(field, x, loc, J, margin, f"E{idx}", resid))
    return _merge_degenerate(out)


def _merge_degenerate(eqs: list[HorizonEquilibrium]) -> list[HorizonEquilibrium]:
    kept: list[HorizonEquilibrium] = []
    for eq in eqs:
        twin = next(
            (
                i
                for i, k in enumerate(kept)
                if eq.classification == k.classification == "nonhyperbolic"
                and np.linalg.norm(eq.location - k.location) <= DEGENERATE_RADIUS
            ),
            None,
        )
        if twin is None:
            kept.append(eq)
        elif eq.residual < kept[twin].residual:
            kept[twin] = eq
    for idx, eq in enumerate(kept):
        eq.label = f"E{idx}"
    return kept


def _find_explicit(field, seeds, margin, theta_range, n_seeds) -> list[HorizonEquilibrium]:
    if field.chart.kind != "directional":
        raise UnsupportedError("explicit fields are supported in directional charts only")
    n, i = field.dimension, field.chart.index
    if seeds is None:
        if theta_range is None:
            theta_range = [(-3.0, 3.0)] * (n - 1)
        m = max(2, int(round(n_seeds ** (1.0 / max(n - 1, 1)))))
        axes = [np.linspace(lo, hi, m) for lo, hi in theta_range]
        grid = np.array(np.meshgrid(*axes, indexing="ij")).reshape(n - 1, -1).T
        seeds = np.insert(grid, i, 0.0, axis=1)
    roots = []
    for z0 in np.atleast_2d(np.asarray(seeds, dtype=float)):
        z = _newton_directional(field, z0)
        if z is None:
            continue
        if np.linalg.norm(field(z)) <= EQ_TOL:
            roots.append(z)
    out = []
    for idx, z in enumerate(_dedupe(roots)):
        J = linearize(field, z)
        x = cp.chart_to_global(field.scheme, cp.DirectionalPoint(i, field.chart.sign, 0.0, np.delete(z, i)))
        out.append(_finish(field, x, z, J, margin, f"E{idx}", float(np.linalg.norm(field(z)))))
    return out


# ----------------------------------------------------------------------
def predict_blowup_exponents(scheme: cp.CompactScheme, eq: HorizonEquilibrium, direction: str = "forward"):
    """Per-component exponents ``-alpha_i/k`` (``None`` where not attached) and the
    norm exponent ``-1/k``."""
    if not eq.hyperbolic:
        raise UnsupportedError("equilibrium is not hyperbolic")
    if direction == "forward" and eq.n_s == 0:
        raise UnsupportedError("equilibrium has no stable directions (forward blow-up impossible)")
    if direction == "backward" and eq.n_u == 0:
        raise UnsupportedError("equilibrium has no unstable directions (backward blow-up impossible)")
    k = scheme.k
    if k < 1:
        raise UnsupportedError("blow-up rates need k >= 1")
    x = np.asarray(eq.location, dtype=float)
    exps = tuple(
        Fraction(-scheme.alpha[i], k) if i in scheme.index_set and abs(x[i]) > NONZERO_THRESHOLD else None
        for i in range(scheme.dimension)
    )
    return exps, Fraction(-1, k)


# ----------------------------------------------------------------------
def _cycle_integrand(field: DesingField, samples: int):
    from .quasitrig import build_table

    table = build_table(field.chart.l, samples)
    th = table.theta[:-1]
    rho = np.empty(th.size)
    omega = np.empty(th.size)
    for m, (C, S) in enumerate(zip(table.cs[:-1], table.sn[:-1])):
        rho[m] = np.imag(quasi_polar_rhs(field, 1j * CS_STEP, C, S)[0]) / CS_STEP
        omega[m] = float(np.real(quasi_polar_rhs(field, 0.0, C, S)[1]))
    return table, th, rho, omega


def horizon_cycle_analysis(field_polar: DesingField, section_theta: float = 0.0, *, samples: int = 512,
                           margin: float = 1e-6) -> HorizonCycle:
    """Floquet multiplier of the horizon ``{r = 0}`` viewed as a periodic orbit.

    Along the flow, ``d log r / d theta = rho(theta) / omega(theta)`` to first
    order, with ``rho = d g_r / d r`` and ``omega = d theta / d tau`` at
    ``r = 0``.  ``alpha_T`` is the integral over one angular period taken in
    increasing ``theta``; the return map along the flow multiplies ``r`` by
    ``exp(orientation * alpha_T)``.  The periodic integrand makes the
    trapezoid rule spectrally accurate; the result is checked against the
    rule with twice as many nodes.
    """
    if field_polar.chart.kind != "quasi-polar":
        raise ChartError("cycle analysis needs a quasi-polar field")
    table, th, rho, omega = _cycle_integrand(field_polar, samples)
    if np.min(np.abs(omega)) < 1e-12 or np.min(omega) * np.max(omega) <= 0.0:
        raise NotACycleError("d theta / d tau vanishes on the horizon")
    alpha = table.period * float(np.mean(rho / omega))
    period_tau = table.period * float(np.mean(1.0 / np.abs(omega)))
    table2, _, rho2, omega2 = _cycle_integrand(field_polar, 2 * samples)
    alpha2 = table2.period * float(np.mean(rho2 / omega2))
    refinement = abs(alpha2 - alpha)
    orientation = 1 if omega[0] > 0 else -1
    flow_mult = math.exp(orientation * alpha2)
    if flow_mult > 1.0 + margin:
        cls = "repelling"
    elif flow_mult < 1.0 - margin:
        cls = "attracting"
    else:
        cls = "nonhyperbolic"
    return_residual = _return_residual(field_polar, table2, section_theta, period_tau, orientation)
    return HorizonCycle(
        section=float(section_theta),
        period_theta=table2.period,
        period_tau=period_tau,
        alpha_T=alpha2,
        multiplier=math.exp(alpha2),
        flow_multiplier=flow_mult,
        orientation=orientation,
        classification=cls,
        refinement_error=refinement,
        return_residual=return_residual,
        margin=margin,
        multipliers=(math.exp(alpha2),),
    )


def _return_residual(field, table, theta0, period_tau, orientation) -> float:
    """Integrate the horizon flow for one period in tau and measure the angular mismatch."""
    from scipy.integrate import solve_ivp

    def rhs(_t, th):
        C, S = table(th[0])
        return [float(np.real(quasi_polar_rhs(field, 0.0, C, S)[1]))]

    sol = solve_ivp(rhs, (0.0, period_tau), [theta0], method="DOP853", rtol=1e-12, atol=1e-12)
    if not sol.success:
        raise NumericError(sol.message)
    return abs(sol.y[0, -1] - (theta0 + orientation * table.period))
