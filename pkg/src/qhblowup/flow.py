"""Integration of desingularized fields, blow-up times and blow-up rates.

The physical time ``t`` is integrated alongside the chart state as a
quadrature component (``dt/dtau = kappa**-k`` or ``s**k``).  In the global
chart the quantity ``w = 1 - p(x)**2c = kappa**-2c`` is carried as
``log w`` with ``d log w / dtau = -2 S(x)``, so the time density near the
horizon is computed without cancellation.  Each step's increment of ``t``
is kept separately, which lets ``t_max - t`` be formed by summing
increments backwards instead of subtracting two nearly equal numbers.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.stats import linregress

from . import compactify as cp
from ._dopri import dopri5
from .desing import DesingField, _assemble, _correction, _f_tilde_terms, correction_sum
from .errors import InputError, InsufficientDataError, UnsupportedError
from .infinity import HorizonCycle, HorizonEquilibrium

__all__ = [
    "Target",
    "IntegrateOptions",
    "Trajectory",
    "BlowUpEstimate",
    "PortraitRow",
    "integrate",
    "estimate_tmax",
    "fit_blowup_rate",
    "sweep_portrait",
    "original_logs",
    "trajectory_rows",
    "write_trajectory_csv",
    "coordinate_names",
]

RATE_WINDOW = (1e-8, 1e-2)
MIN_FIT_SAMPLES = 30
MIN_SECTION_RETURNS = 5
MIN_DECADES = 2.0


@dataclass(frozen=True)
class Target:
    """A registered omega-limit candidate.  ``location`` is in the field's chart
    coordinates (natural order) for equilibria and ``None`` for cycles."""

    id: str
    kind: str = "equilibrium"  # "equilibrium" | "cycle"
    location: Optional[tuple] = None
    on_horizon: bool = True

    @classmethod
    def from_equilibrium(cls, eq: HorizonEquilibrium, id: str | None = None) -> "Target":
        loc = eq.chart_location if eq.chart.kind != "global" else eq.location
        return cls(id or eq.label, "equilibrium", tuple(float(v) for v in loc), True)


@dataclass(frozen=True)
class IntegrateOptions:
    rtol: float = 1e-10
    atol: float = 1e-12
    max_step: float = 0.1
    eps_eq: float = 1e-9
    tail_tol: float = 1e-14
    targets: tuple = ()
    max_steps: int = 400_000

    def __post_init__(self) -> None:
        if self.rtol <= 0 or self.atol <= 0:
            raise InputError("tolerances must be positive")


@dataclass
class Trajectory:
    chart: str
    tau: np.ndarray
    states: np.ndarray  # (m, n) chart coordinates
    t: np.ndarray  # accumulated physical time at each sample
    dt_steps: np.ndarray  # (m - 1,) physical-time increment of each step
    rate: np.ndarray  # dt/dtau at each sample
    log_w: Optional[np.ndarray]  # global chart: log(1 - p(x)^2c); None otherwise
    termination: str
    target_id: Optional[str] = None
    message: str = ""

    def __len__(self) -> int:
        return self.tau.size

    @property
    def converged(self) -> bool:
        return self.termination.startswith("converged")


@dataclass
class BlowUpEstimate:
    t_max: float
    tail: float
    tail_bound: float
    lambda_tail: float
    lambda_predicted: Optional[float]
    target: Optional[str]
    fitted_norm_exponent: Optional[float] = None
    fitted_component_exponents: tuple = ()
    fitted_constant: Optional[float] = None
    fit_residual: Optional[float] = None
    fit_samples: int = 0
    remaining: np.ndarray = dc_field(default=None, repr=False)

    def to_json(self) -> dict:
        return {
            "t_max": self.t_max,
            "tail": self.tail,
            "tail_bound": self.tail_bound,
            "lambda_tail": self.lambda_tail,
            "lambda_predicted": self.lambda_predicted,
            "target": self.target,
            "fitted_norm_exponent": self.fitted_norm_exponent,
            "fitted_component_exponents": list(self.fitted_component_exponents),
            "fitted_constant": self.fitted_constant,
            "fit_residual": self.fit_residual,
            "fit_samples": self.fit_samples,
        }


# ----------------------------------------------------------------------
def _chart_s(field: DesingField, z) -> float:
    return z[0] if field.chart.kind == "quasi-polar" else z[field.chart.index]


def _power_sum_grad(scheme: cp.CompactScheme, x) -> np.ndarray:
    g = np.zeros(scheme.dimension)
    for i in scheme.index_set:
        b = scheme.beta[i]
        g[i] = 2 * b * scheme.a[i] * x[i] ** (2 * b - 1)
    return g


def integrate(field: DesingField, x0, tau_end: float, opts: IntegrateOptions | None = None, **kw) -> Trajectory:
    """Integrate the desingularized field from ``x0`` (chart coordinates) up to ``tau_end``."""
    opts = replace(opts or IntegrateOptions(), **kw) if kw else (opts or IntegrateOptions())
    x0 = np.asarray(x0, dtype=float)
    n = field.dimension
    if x0.shape != (n,):
        raise InputError(f"initial point must have length {n}")
    sch, k = field.scheme, field.k
    q = k / (2.0 * sch.c)
    glob = field.chart.kind == "global"
    horizon_start = False
    if glob:
        if field.explicit is not None:
            raise UnsupportedError("explicit fields are integrated in their directional chart")
        w0 = 1.0 - float(cp.power_sum(sch, x0))
        if w0 < -cp.HORIZON_TOL:
            raise InputError("initial point lies outside the closed disc")
        horizon_start = w0 <= cp.HORIZON_TOL
        if horizon_start:
            y0 = np.concatenate([x0, [0.0]])

            def rhs(_tau, y):
                # the horizon is invariant, but with w frozen at 0 the field is not tangent off it;
                # integrate the tangential part plus a relaxation of p^2c - 1
                x = y[:n]
                ft = field.sign * _f_tilde_terms(field, x, w=0.0)
                g = _assemble(field, x, ft)
                grad = _power_sum_grad(sch, x)
                nn = float(grad @ grad)
                if nn > 0.0:
                    g = g - (float(grad @ g) + (float(cp.power_sum(sch, x)) - 1.0)) / nn * grad
                return np.concatenate([g, [0.0]])

            mask = np.r_[np.ones(n, bool), False]
        else:
            y0 = np.concatenate([x0, [math.log(w0), 0.0]])

            def rhs(_tau, y):
                x, lw = y[:n], y[n]
                w = math.exp(lw)
                ft = field.sign * _f_tilde_terms(field, x, w=w)
                g = _assemble(field, x, ft)
                S = _correction(field, x, ft)
                return np.concatenate([g, [-2.0 * S, math.exp(q * lw)]])

            mask = np.r_[np.ones(n + 1, bool), False]
    else:
        if _chart_s(field, x0) < 0.0:
            raise InputError("chart coordinate s must be nonnegative")
        y0 = np.concatenate([x0, [0.0]])

        def rhs(_tau, y):
            z = y[:n]
            return np.concatenate([field(z), [max(_chart_s(field, z), 0.0) ** k]])

        mask = np.r_[np.ones(n, bool), False]

    targets = tuple(opts.targets)

    def rate_of(y) -> float:
        if glob:
            return 0.0 if horizon_start else math.exp(q * y[n])
        return max(_chart_s(field, y[:n]), 0.0) ** k

    def event(_tau, y) -> Optional[str]:
        z = y[:n]
        if glob:
            if float(cp.power_sum(sch, z)) > 1.0 + 1e-8:
                return "left-domain"
        else:
            if _chart_s(field, z) < -1e-12 or np.max(np.abs(z)) > 1e8:
                return "left-domain"
        rate = rate_of(y)
        t_now = y[-1]
        tail_small = rate <= opts.tail_tol * max(1.0, t_now)
        for tg in targets:
            if tg.kind == "equilibrium":
                if np.linalg.norm(z - np.asarray(tg.location)) <= opts.eps_eq and (not tg.on_horizon or tail_small):
                    return f"converged-to-equilibrium:{tg.id}"
            elif tail_small:
                return f"converged-to-cycle:{tg.id}"
        if not targets:
            g = rhs(0.0, y)[:n]
            if np.linalg.norm(g) <= opts.eps_eq and (tail_small or rate > 1e-3):
                return "converged-to-equilibrium:"
            if tail_small and (horizon_start is False):
                return "converged-to-horizon:"
        return None

    res = dopri5(rhs, 0.0, y0, float(tau_end), rtol=opts.rtol, atol=opts.atol, max_step=opts.max_step,
                 error_mask=mask, event=event, max_steps=opts.max_steps)
    if res.status == "event":
        term, _, tid = res.message.partition(":")
        target_id = tid or None
    elif res.status == "t_end":
        term, target_id = "reached-tau-limit", None
    else:
        term, target_id = "step-failure", None
    states = res.y[:, :n]
    dt_steps = res.dy[:, -1].copy()
    t = np.concatenate([[0.0], np.cumsum(dt_steps)])
    if glob and not horizon_start:
        log_w = res.y[:, n].copy()
        rate = np.exp(q * log_w)
    elif glob:
        log_w = np.full(res.t.size, -np.inf)
        rate = np.zeros(res.t.size)
    else:
        log_w = None
        rate = np.array([max(_chart_s(field, z), 0.0) ** k for z in states])
    return Trajectory(field.chart.label(), res.t, states, t, dt_steps, rate, log_w, term, target_id,
                      res.message if res.status != "event" else "")


# ----------------------------------------------------------------------
def original_logs(field: DesingField, traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """``log p(y)`` and ``log|y_i|`` of the original coordinates at every sample."""
    sch = field.scheme
    alpha = np.array(sch.alpha, dtype=float)
    c2 = 2.0 * sch.c
    Z = traj.states
    with np.errstate(divide="ignore"):
        if field.chart.kind == "global":
            lw = traj.log_w
            psum = np.array([float(cp.power_sum(sch, z)) for z in Z])
            log_p = (np.log(psum) - lw) / c2
            log_y = np.log(np.abs(Z)) - np.outer(lw, alpha) / c2
            return log_p, log_y
        if field.chart.kind == "quasi-polar":
            from .quasitrig import get_table

            C, S = get_table(field.chart.l)(Z[:, 1])
            H = np.stack([C, S], axis=1)
            s = Z[:, 0]
        else:
            i, sg = field.chart.index, field.chart.sign
            H = Z.copy()
            H[:, i] = sg
            s = Z[:, i]
        psum = np.array([float(cp.power_sum(sch, h)) for h in H])
        log_s = np.log(s)
        log_p = -log_s + np.log(psum) / c2
        log_y = np.log(np.abs(H)) - np.outer(log_s, alpha)
        return log_p, log_y


def _lambda_predicted(field: DesingField, target) -> Optional[float]:
    k = field.k
    if isinstance(target, HorizonEquilibrium):
        if target.chart != field.chart:
            return None
        if field.chart.kind == "global":
            return float(k * correction_sum(field, target.location, w=0.0) / field.scheme.c)
        idx = 0 if field.chart.kind == "quasi-polar" else field.chart.index
        return float(-k * target.jacobian[idx, idx])
    if isinstance(target, HorizonCycle):
        return float(-k * math.log(target.flow_multiplier) / target.period_tau)
    return None


def estimate_tmax(field: DesingField, traj: Trajectory, target=None) -> BlowUpEstimate:
    """Blow-up time ``t(tau_N) + tail`` with a geometric tail fitted to ``dt/dtau``."""
    if not traj.converged:
        raise UnsupportedError(f"trajectory did not converge to a target ({traj.termination})")
    if isinstance(target, HorizonEquilibrium):
        if not target.hyperbolic or target.n_s == 0:
            raise UnsupportedError("target must be hyperbolic with a stable direction")
    rate = traj.rate
    if rate[-1] <= 0.0:
        raise UnsupportedError("trajectory started on the horizon; no finite blow-up time")
    lr = np.log(rate)
    sel = np.nonzero(lr <= lr[-1] + math.log(10.0))[0]
    sel = sel[sel >= sel.max() - 2000]
    if sel.size < 5:
        sel = np.arange(max(0, rate.size - 10), rate.size)
    reg = linregress(traj.tau[sel], lr[sel])
    lam = -float(reg.slope)
    if not lam > 0.0:
        raise UnsupportedError("time density is not decaying at the end of the trajectory")
    tail = float(rate[-1] / lam)
    lam_pred = _lambda_predicted(field, target)
    # uncertainty of the decay rate: regression error, plus disagreement with the linearization
    rel = float(reg.stderr) / lam
    if lam_pred is not None and lam_pred > 0.0:
        rel = max(rel, abs(lam - lam_pred) / lam_pred)
    tail_bound = abs(tail) * rel
    remaining = tail + np.concatenate([np.cumsum(traj.dt_steps[::-1])[::-1], [0.0]])
    return BlowUpEstimate(
        t_max=float(traj.t[-1] + tail),
        tail=tail,
        tail_bound=tail_bound,
        lambda_tail=lam,
        lambda_predicted=lam_pred,
        target=traj.target_id,
        remaining=remaining,
    )


def _section_returns(traj: Trajectory, log_rem, log_p, log_y):
    """Interpolated values at crossings of ``x_2 = 0`` with ``x_1 > 0``."""
    Z = traj.states
    rows = []
    for m in range(Z.shape[0] - 1):
        a, b = Z[m, 1], Z[m + 1, 1]
        if a == 0.0 or a * b >= 0.0 or Z[m, 0] <= 0.0:
            continue
        f = a / (a - b)
        rows.append((
            (1 - f) * log_rem[m] + f * log_rem[m + 1],
            (1 - f) * log_p[m] + f * log_p[m + 1],
            (1 - f) * log_y[m] + f * log_y[m + 1],
        ))
    return rows


def fit_blowup_rate(field: DesingField, traj: Trajectory, estimate: BlowUpEstimate, target=None,
                    window: tuple[float, float] = RATE_WINDOW) -> BlowUpEstimate:
    """Least-squares slopes of ``log p(y)`` and ``log|y_i|`` against ``log(t_max - t)``."""
    rem = estimate.remaining
    if rem is None:
        raise InputError("estimate carries no remaining-time samples")
    log_p, log_y = original_logs(field, traj)
    inwin = (rem >= window[0]) & (rem <= window[1])
    idx = np.nonzero(inwin)[0]
    if idx.size < MIN_FIT_SAMPLES:
        raise InsufficientDataError(f"only {idx.size} samples in the fitting window")
    span = math.log10(rem[idx].max() / rem[idx].min())
    if span < MIN_DECADES:
        raise InsufficientDataError(f"fitting window spans only {span:.2f} decades")
    log_rem = np.log(rem)
    cycle = isinstance(target, HorizonCycle) or (traj.termination == "converged-to-cycle")
    if cycle:
        if field.chart.kind != "global" or field.dimension != 2:
            raise UnsupportedError("section sampling is implemented for planar global charts")
        lo, hi = idx.min(), idx.max()
        rows = _section_returns(
            replace(traj, states=traj.states[lo:hi + 1]), log_rem[lo:hi + 1], log_p[lo:hi + 1], log_y[lo:hi + 1]
        )
        if len(rows) < MIN_SECTION_RETURNS:
            raise InsufficientDataError(f"only {len(rows)} section returns in the fitting window")
        X = np.array([r[0] for r in rows])
        P = np.array([r[1] for r in rows])
        Y = np.array([r[2] for r in rows])
        ref = np.exp(Y[-1])
        ref[1] = 0.0  # the section coordinate vanishes at every return
    else:
        X, P, Y = log_rem[idx], log_p[idx], log_y[idx]
        if isinstance(target, HorizonEquilibrium) and target.location is not None:
            ref = np.abs(target.location)
        else:
            ref = np.abs(traj.states[-1]) if field.chart.kind == "global" else np.exp(Y[-1])
    reg = linregress(X, P)
    resid = float(np.sqrt(np.mean((P - (reg.intercept + reg.slope * X)) ** 2)))
    comps = []
    for i in range(field.dimension):
        if i in field.scheme.index_set and ref[i] > 1e-8 and np.all(np.isfinite(Y[:, i])):
            comps.append(float(linregress(X, Y[:, i]).slope))
        else:
            comps.append(None)
    return replace(
        estimate,
        fitted_norm_exponent=float(reg.slope),
        fitted_component_exponents=tuple(comps),
        fitted_constant=float(math.exp(reg.intercept)),
        fit_residual=resid,
        fit_samples=int(X.size),
    )


# ----------------------------------------------------------------------
@dataclass
class PortraitRow:
    index: int
    start: tuple
    termination: str
    target_id: Optional[str]
    tau_end: float
    t_end: float
    trajectory: Optional[Trajectory] = None


def _portrait_job(args):
    idx, field, x0, tau_end, opts, keep = args
    try:
        tr = integrate(field, x0, tau_end, opts)
    except Exception as exc:  # per-trajectory failures are recorded in-row
        return PortraitRow(idx, tuple(map(float, x0)), f"error:{type(exc).__name__}", None, 0.0, 0.0)
    return PortraitRow(idx, tuple(map(float, x0)), tr.termination, tr.target_id, float(tr.tau[-1]),
                       float(tr.t[-1]), tr if keep else None)


def sweep_portrait(field: DesingField, grid: Sequence, tau_end: float, opts: IntegrateOptions | None = None,
                   jobs: int = 1, keep_trajectories: bool = False) -> list[PortraitRow]:
    """Integrate every start of ``grid``; rows come back in grid order regardless of ``jobs``."""
    opts = opts or IntegrateOptions()
    tasks = [(m, field, np.asarray(x0, dtype=float), tau_end, opts, keep_trajectories) for m, x0 in enumerate(grid)]
    if jobs <= 1 or len(tasks) <= 1:
        rows = [_portrait_job(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_portrait_job, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    rows.sort(key=lambda r: r.index)
    return rows


# ----------------------------------------------------------------------
def coordinate_names(field: DesingField) -> list[str]:
    n = field.dimension
    if field.chart.kind == "global":
        return [f"x{i + 1}" for i in range(n)]
    if field.chart.kind == "quasi-polar":
        return ["r", "theta"]
    return ["s" if j == field.chart.index else f"theta{j + 1}" for j in range(n)]


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def trajectory_rows(field: DesingField, traj: Trajectory) -> list[list[str]]:
    if field.chart.kind == "global":
        pval = [float(cp.power_sum(field.scheme, z)) ** (1.0 / (2 * field.scheme.c)) for z in traj.states]
    else:
        pval = [_chart_s(field, z) for z in traj.states]
    rows = []
    for m in range(len(traj)):
        rows.append([_fmt(traj.tau[m]), _fmt(traj.t[m])] + [_fmt(v) for v in traj.states[m]] + [_fmt(pval[m])])
    return rows


def write_trajectory_csv(target, field: DesingField, traj: Trajectory) -> str:
    """Write ``tau,t,<coords>,p`` rows (``p`` is ``p(x)`` globally, ``s`` in charts).

    ``target`` is a path, a text stream, or ``None`` (return the text only).
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tau", "t", *coordinate_names(field), "p"])
    w.writerows(trajectory_rows(field, traj))
    text = buf.getvalue()
    if target is None:
        return text
    if hasattr(target, "write"):
        target.write(text)
    else:
        with open(target, "w", newline="") as fh:
            fh.write(text)
    return text
