"""Command-line front end.

Commands::

    qhblowup analyze   (--scenario NAME | --model FILE) [options]
    qhblowup blowup    (--scenario NAME | --model FILE) --x0 V1,V2,... [--backward]
    qhblowup portrait  (--scenario NAME | --model FILE) [--grid N] [--svg FILE]
    qhblowup plot      CSV [--x COL --y COL] [--svg FILE]
    qhblowup scenario list

Exit codes: 0 success, 2 parse/input error, 3 numeric failure, 4 divergence
without convergence to a classified target.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import compactify as cp
from .desing import GLOBAL, Chart, DesingField, directional_chart, make_desing, quasi_polar_chart, to_natural
from .errors import InputError, InsufficientDataError, NotACycleError, QHError, UnsupportedError
from .flow import (
    IntegrateOptions,
    Target,
    coordinate_names,
    estimate_tmax,
    fit_blowup_rate,
    integrate,
    sweep_portrait,
    write_trajectory_csv,
)
from .infinity import find_horizon_equilibria, horizon_cycle_analysis, predict_blowup_exponents
from .qhfield import PolyVectorField, check_c1_extension, decompose, detect_signatures, parse_field, validate_signature
from .scenarios import Scenario, get_scenario, list_scenarios, two_fluid_chain
from .svg import Series, render_svg

__all__ = ["main", "build_parser", "dumps"]

EXIT_OK, EXIT_PARSE, EXIT_NUMERIC, EXIT_DIVERGENCE = 0, 2, 3, 4
NO_SIGNATURE = "no quasi-homogeneous signature found"
PORTRAIT_MAX_STEP = 1.0  # sweeps only tag limit sets, so coarse dense output suffices
NEAR_RADIUS = 0.05  # tau-limited runs ending this close to a finite equilibrium are tagged near:<id>


class Divergence(Exception):
    """Integration ended without reaching a classified target."""

    def __init__(self, report: dict):
        super().__init__(report.get("termination", "diverged"))
        self.report = report


# ----------------------------------------------------------------------
# output helpers
def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _json_value(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or (isinstance(obj, float) and not math.isfinite(obj)):
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(obj)
    if isinstance(obj, Fraction):
        return json.dumps(str(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json_value(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_json_value(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _json_value(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with every float written to 17 significant digits."""
    return _json_value(obj, indent, 0) + "\n"


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _floats(text: str, what: str) -> tuple:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise InputError(f"{what}: expected comma-separated numbers, got {text!r}") from None
    if not all(math.isfinite(v) for v in vals):
        raise InputError(f"{what}: values must be finite")
    return vals


# ----------------------------------------------------------------------
# sources
@dataclass
class Source:
    name: str
    dimension: int
    field: Optional[PolyVectorField]
    scenario: Optional[Scenario] = None
    signatures: list = dc_field(default_factory=list)
    scheme: Optional[cp.CompactScheme] = None
    chart: Chart = GLOBAL
    integration: dict = dc_field(default_factory=dict)
    notes: list = dc_field(default_factory=list)

    @property
    def explicit(self) -> bool:
        return self.field is None


def _parse_chart(spec: str, alpha: Sequence[int]) -> Chart:
    spec = spec.strip()
    if spec == "global":
        return GLOBAL
    if spec == "quasi-polar":
        if len(alpha) != 2 or alpha[0] != 1:
            raise InputError("the quasi-polar chart needs a planar type (1, l)")
        return quasi_polar_chart(alpha[1])
    if spec.startswith("directional"):
        parts = spec.split(":")
        if len(parts) != 3 or parts[2] not in ("+", "-"):
            raise InputError("directional chart syntax is directional:<i>:<+|->  (i is 1-based)")
        try:
            i = int(parts[1]) - 1
        except ValueError:
            raise InputError(f"bad chart index {parts[1]!r}") from None
        if not 0 <= i < len(alpha) or alpha[i] == 0:
            raise InputError(f"chart index {i + 1} is not a homogeneity index")
        return directional_chart(i, 1 if parts[2] == "+" else -1)
    raise InputError(f"unknown chart {spec!r}")


def _scheme_a(args, alpha, fallback):
    if getattr(args, "scheme_a", None):
        a = _floats(args.scheme_a, "--scheme-a")
        if len(a) != len(alpha):
            raise InputError("--scheme-a length differs from the dimension")
        return a
    return fallback


def _scenario_params(args) -> dict:
    name = args.scenario
    params = {}
    if name == "lienard" and args.n is not None:
        params["n"] = args.n
    if name == "two-fluid":
        if args.rho1 is not None:
            params["rho1"] = args.rho1
        if args.rho2 is not None:
            params["rho2"] = args.rho2
        # boundary states are given as chart points (beta, 1/v)
        for flag, key in ((args.uL, "uL"), (args.uR, "uR")):
            if flag is not None:
                vals = _floats(flag, f"--{key}")
                if len(vals) != 2:
                    raise InputError(f"--{key} needs two values beta,1/v")
                beta, r = vals
                if r <= 0.0:
                    raise InputError(f"--{key}: 1/v must be positive")
                params[key] = (beta, 1.0 / r)
    return params


def load_source(args, purpose: str = "analyze") -> Source:
    if bool(args.scenario) == bool(args.model):
        raise InputError("give exactly one of --scenario or --model")
    if args.scenario:
        sc = get_scenario(args.scenario, **_scenario_params(args))
        alpha = sc.alpha
        if sc.field is not None:
            key = "figure" if purpose != "analyze" and "figure" in sc.schemes else "default"
            base = sc.schemes[key]
            a = _scheme_a(args, alpha, base.a)
            scheme = cp.make_scheme(alpha, a, sc.k)
            sigs = [(tuple(s), k) for s, k in detect_signatures(sc.field, max(4, max(alpha)))]
        else:
            scheme = sc.scheme
            sigs = [(tuple(alpha), sc.k)]
        chart = _parse_chart(args.chart, alpha) if args.chart else sc.preferred_chart
        if sc.field is None and chart.kind != "directional":
            raise InputError("explicit scenarios are only available in their directional chart")
        return Source(sc.name, len(alpha), sc.field, sc, sigs, scheme, chart)

    try:
        with open(args.model) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read model: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"model is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise InputError("model document must be a JSON object")
    F = parse_field(doc)
    name = os.path.splitext(os.path.basename(args.model))[0]
    src = Source(name, F.dimension, F, integration=dict(doc.get("integration") or {}))
    src.signatures = [(tuple(s), k) for s, k in detect_signatures(F, args.alpha_max)] if F.dimension else []
    block = doc.get("scheme")
    alpha = None
    if block is not None:
        try:
            alpha = tuple(int(v) for v in block["alpha"])
            a = block.get("a")
        except (KeyError, TypeError, ValueError):
            raise InputError("scheme block needs an integer list 'alpha'") from None
        k = validate_signature(F, alpha)
        if k is None or k < 1:
            raise InputError(f"scheme type {alpha} is not a quasi-homogeneous signature of the field")
        if "k" in block and int(block["k"]) != k:
            raise InputError(f"scheme block states k = {block['k']} but the field has k = {k}")
    elif args.alpha:
        alpha = tuple(int(v) for v in _floats(args.alpha, "--alpha"))
        k = validate_signature(F, alpha)
        if k is None or k < 1:
            raise InputError(f"type {alpha} is not a quasi-homogeneous signature of the field")
        a = None
    elif len(src.signatures) == 1:
        alpha, k = src.signatures[0]
        a = None
    elif len(src.signatures) > 1:
        src.notes.append("several signatures detected; select one with --alpha or a scheme block")
    if alpha is not None:
        src.scheme = cp.make_scheme(alpha, _scheme_a(args, alpha, a), k)
        chart_spec = args.chart or doc.get("chart") or "global"
        src.chart = _parse_chart(chart_spec, alpha)
    return src


def _desing(src: Source, chart: Optional[Chart] = None, reverse: bool = False, branch: Optional[str] = None):
    chart = chart or src.chart
    if src.explicit:
        return src.scenario.desing(chart=chart, reverse=reverse, branch=branch)
    return make_desing(src.field, src.scheme, chart, reverse)


def _rng_seed() -> Optional[int]:
    env = os.environ.get("HORIZON_SEED")
    if env is None or env == "":
        return None
    try:
        return int(env)
    except ValueError:
        raise InputError("HORIZON_SEED must be an integer") from None


def _equilibria(src: Source, field: DesingField, margin: float = 1e-6):
    kw = {}
    if src.explicit:
        kw["theta_range"] = src.scenario.seed_theta_range
    return find_horizon_equilibria(field, margin=margin, rng_seed=_rng_seed(), **kw)


def _cycle(src: Source, field: DesingField):
    """Horizon cycle analysis for planar types ``(1, l)``; ``None`` if not applicable."""
    alpha = src.scheme.alpha
    if src.explicit or len(alpha) != 2 or alpha[0] != 1:
        return None
    try:
        return horizon_cycle_analysis(field.with_chart(quasi_polar_chart(alpha[1])))
    except NotACycleError:
        return None


def _options(args, src: Source, **extra) -> IntegrateOptions:
    integ = src.integration
    rtol = args.tol_rel if args.tol_rel is not None else float(integ.get("rtol", 1e-10))
    atol = args.tol_abs if args.tol_abs is not None else float(integ.get("atol", 1e-12))
    kw = {"rtol": rtol, "atol": atol}
    if "max_step" in integ:
        kw["max_step"] = float(integ["max_step"])
    kw.update(extra)
    return IntegrateOptions(**kw)


def _tau_max(args, src: Source, default: float) -> float:
    if args.tau_max is not None:
        if not args.tau_max > 0:
            raise InputError("--tau-max must be positive")
        return args.tau_max
    return float(src.integration.get("tau_max", default))


# ----------------------------------------------------------------------
# analyze
def cmd_analyze(args) -> int:
    src = load_source(args, "analyze")
    report = {
        "source": src.name,
        "dimension": src.dimension,
        "signatures": [{"alpha": list(a), "k": k} for a, k in src.signatures],
    }
    lines = [f"source: {src.name} (dimension {src.dimension})"]
    if not src.signatures:
        report["message"] = NO_SIGNATURE
        lines.append(NO_SIGNATURE)
        _finish_report(args, report, lines)
        return EXIT_OK
    for a, k in src.signatures:
        lines.append(f"signature: alpha = {tuple(a)}, k = {k}")
    if src.scheme is None:
        report["scheme"] = None
        report["notes"] = src.notes
        lines.extend(src.notes)
        _finish_report(args, report, lines)
        return EXIT_OK
    sch = src.scheme
    report["scheme"] = sch.to_json()
    lines.append(f"scheme: alpha = {sch.alpha}, a = {sch.a}, k = {sch.k}, c = {sch.c}")
    if src.field is not None:
        cert = check_c1_extension(decompose(src.field, sch.alpha), sch.c)
        report["c1_certificate"] = {
            "ok": bool(cert.ok),
            "violations": [{"component": j + 1, "exponents": list(m), "deficit": d} for j, m, d in cert.violations],
        }
        lines.append(f"C1 extension to the horizon: {'certified' if cert.ok else 'not certified'}")
    else:
        report["c1_certificate"] = None
        lines.append("explicit chart field (C1 certificate not applicable)")
    if src.scenario is not None and src.scenario.boundary:
        report["boundary"] = dict(src.scenario.boundary)
    field = _desing(src, branch=args.branch)
    report["chart"] = field.chart.label()
    eqs = _equilibria(src, field)
    report["equilibria"] = []
    lines.append(f"chart: {field.chart.label()}")
    lines.append(f"horizon equilibria: {len(eqs)}")
    if eqs:
        lines.append(f"  {'label':<6} {'location':<44} {'eigenvalues':<48} classification")
    for eq in eqs:
        d = eq.to_json()
        try:
            exps, norm = predict_blowup_exponents(sch, eq)
            d["predicted_exponents"] = [None if e is None else str(e) for e in exps]
            d["predicted_norm_exponent"] = str(norm)
        except UnsupportedError:
            d["predicted_exponents"] = None
        report["equilibria"].append(d)
        loc = "(" + ", ".join(f"{v:.12g}" for v in eq.chart_location) + ")"
        ev = "(" + ", ".join(_cfmt(e) for e in eq.eigenvalues) + ")"
        lines.append(f"  {eq.label:<6} {loc:<44} {ev:<48} {eq.classification}")
    if not eqs:
        cyc = _cycle(src, field)
        if cyc is not None:
            report["horizon_cycle"] = cyc.to_json()
            lines.append(
                f"horizon is a periodic orbit: alpha(T) = {cyc.alpha_T:.12g}, multiplier = {cyc.multiplier:.12g}, "
                f"{cyc.classification}"
            )
    _finish_report(args, report, lines)
    return EXIT_OK


def _cfmt(z) -> str:
    z = complex(z)
    if z.imag == 0.0:
        return f"{z.real:.12g}"
    return f"{z.real:.10g}{z.imag:+.10g}i"


def _finish_report(args, report: dict, lines: list) -> None:
    text = dumps(report)
    if args.out:
        _emit(text, args.out)
    if args.json:
        sys.stdout.write(text)
    else:
        sys.stdout.write("\n".join(lines) + "\n")


# ----------------------------------------------------------------------
# blowup
def _start_point(src: Source, field: DesingField, y0) -> np.ndarray:
    y0 = np.asarray(y0, dtype=float)
    if y0.shape != (src.dimension,):
        raise InputError(f"--x0 needs {src.dimension} values")
    if field.chart.kind == "global":
        return cp.compactify(src.scheme, y0)
    if field.chart.kind == "directional":
        return to_natural(cp.dir_compactify(src.scheme, field.chart.index, field.chart.sign, y0))
    raise InputError("blow-up runs use the global or a directional chart")


def _blowup_field(src: Source, args) -> DesingField:
    chart = src.chart
    if src.field is not None and chart.kind == "quasi-polar":
        chart = GLOBAL  # quasi-polar starts are not expressible in original coordinates
    return _desing(src, chart, reverse=args.backward, branch=args.branch)


def run_blowup(args) -> dict:
    src = load_source(args, "blowup")
    if src.scheme is None:
        raise UnsupportedError(NO_SIGNATURE if not src.signatures else src.notes[0])
    if args.x0 is None:
        raise InputError("--x0 is required")
    field = _blowup_field(src, args)
    if args.chart_coords:
        z0 = np.asarray(_floats(args.x0, "--x0"), dtype=float)
        if z0.shape != (src.dimension,):
            raise InputError(f"--x0 needs {src.dimension} values")
    else:
        z0 = _start_point(src, field, _floats(args.x0, "--x0"))
    eqs = _equilibria(src, field)
    targets, objects = [], {}
    for eq in eqs:
        if eq.hyperbolic and eq.n_s > 0:
            tg = Target.from_equilibrium(eq)
            targets.append(tg)
            objects[tg.id] = eq
    cyc = None
    if not eqs:
        cyc = _cycle(src, field)
        if cyc is not None and cyc.classification == "attracting":
            targets.append(Target("horizon-cycle", "cycle"))
            objects["horizon-cycle"] = cyc
    opts = _options(args, src, targets=tuple(targets))
    traj = integrate(field, z0, _tau_max(args, src, 2000.0), opts)
    report = {
        "source": src.name,
        "direction": "backward" if args.backward else "forward",
        "x0": list(_floats(args.x0, "--x0")),
        "x0_coordinates": "chart" if args.chart_coords else "original",
        "chart": field.chart.label(),
        "chart_start": z0,
        "scheme": src.scheme.to_json(),
        "targets": [t.id for t in targets],
        "termination": traj.termination,
        "target": traj.target_id,
        "steps": len(traj) - 1,
        "tau_end": float(traj.tau[-1]),
        "t_end": float(traj.t[-1]),
        "notes": [],
    }
    if cyc is not None:
        report["horizon_cycle"] = cyc.to_json()
    if args.csv:
        write_trajectory_csv(args.csv, field, traj)
    if not traj.converged or traj.target_id not in objects:
        report["estimate"] = None
        raise Divergence(report)
    obj = objects[traj.target_id]
    est = estimate_tmax(field, traj, obj)
    try:
        est = fit_blowup_rate(field, traj, est, obj)
    except (InsufficientDataError, UnsupportedError) as exc:
        report["notes"].append(f"rate fit skipped: {exc}")
    report["estimate"] = est.to_json()
    if cyc is None:
        exps, norm = predict_blowup_exponents(src.scheme, obj)
        report["predicted_exponents"] = [None if e is None else str(e) for e in exps]
        report["predicted_norm_exponent"] = str(norm)
    else:
        report["predicted_norm_exponent"] = str(Fraction(-1, src.scheme.k))
    return report


def cmd_blowup(args) -> int:
    try:
        report = run_blowup(args)
    except Divergence as exc:
        _emit(dumps(exc.report), args.out)
        sys.stderr.write(f"qhblowup: no blow-up detected ({exc.report['termination']})\n")
        return EXIT_DIVERGENCE
    _emit(dumps(report), args.out)
    return EXIT_OK


# ----------------------------------------------------------------------
# portrait
def portrait_grid(src: Source, field: DesingField, n: int) -> list:
    if n <= 0:
        return []
    if src.dimension != 2:
        raise UnsupportedError("portrait grids are implemented for planar systems")
    if field.chart.kind == "global":
        u = np.linspace(-1.0, 1.0, n + 2)[1:-1]
        return [np.array([a, b]) for b in u for a in u if float(cp.power_sum(src.scheme, (a, b))) < 1.0 - 1e-9]
    if field.chart.kind == "directional" and src.scenario is not None and src.scenario.boundary:
        b = src.scenario.boundary
        th = np.linspace(b["rho1"], b["rho2"], n + 2)[1:-1]
        s = np.linspace(0.0, 0.5, n + 1)[1:]
        i = field.chart.index
        return [np.insert(np.array([t]), i, r) for r in s for t in th]
    raise UnsupportedError("portrait grids are implemented for the global chart and the two-fluid chart")


def _portrait_targets(src: Source, field: DesingField) -> tuple:
    targets = [Target.from_equilibrium(eq) for eq in _equilibria(src, field) if eq.hyperbolic]
    if field.chart.kind == "global" and src.field is not None:
        zero = np.zeros(src.dimension)
        if np.all(src.field(zero) == 0.0):
            targets.append(Target("origin", "equilibrium", tuple(zero), False))
    return tuple(targets)


def cmd_portrait(args) -> int:
    src = load_source(args, "portrait")
    if src.scheme is None:
        raise UnsupportedError(NO_SIGNATURE if not src.signatures else src.notes[0])
    field = _blowup_field(src, args)
    grid = portrait_grid(src, field, args.grid)
    tau_end = _tau_max(args, src, 200.0)
    names = [f"start_{c}" for c in coordinate_names(field)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", *names, "omega", "alpha", "tau_end", "t_end"])
    keep = bool(args.svg)
    paths = []
    if grid:
        fwd = field
        bwd = field.reversed()
        step = float(src.integration.get("max_step", PORTRAIT_MAX_STEP))
        tg_f, tg_b = _portrait_targets(src, fwd), _portrait_targets(src, bwd)
        rows_f = sweep_portrait(fwd, grid, tau_end, _options(args, src, targets=tg_f, max_step=step),
                                jobs=args.jobs, keep_trajectories=True)
        rows_b = sweep_portrait(bwd, grid, tau_end, _options(args, src, targets=tg_b, max_step=step),
                                jobs=args.jobs, keep_trajectories=True)
        for rf, rb in zip(rows_f, rows_b):
            w.writerow([f"g{rf.index}", *(_fmt(v) for v in rf.start), _tag(rf, tg_f), _tag(rb, tg_b),
                        _fmt(rf.tau_end), _fmt(rf.t_end)])
            if keep:
                paths.extend(tr for tr in (rf.trajectory, rb.trajectory) if tr is not None)
    if src.explicit and src.scenario.name == "two-fluid" and args.grid > 0:
        chain = two_fluid_chain(src.scenario)
        for name, tr in chain.items():
            start = tr.states[0]
            w.writerow([name, *(_fmt(v) for v in start), _chain_tag(tr), "", _fmt(tr.tau[-1]), _fmt(tr.t[-1])])
            if keep:
                paths.append(tr)
    _emit(buf.getvalue(), args.out)
    if args.svg:
        series = [Series(tr.states[:, 0], tr.states[:, 1], color="#1f77b4", width=0.8) for tr in paths]
        series.extend(_horizon_series(src, field))
        names = coordinate_names(field)
        _emit(render_svg(series, title=f"{src.name} portrait", xlabel=names[0], ylabel=names[1],
                         equal_aspect=field.chart.kind == "global"), args.svg)
    return EXIT_OK


def _tag(row, targets: Sequence[Target] = ()) -> str:
    """Limit-set tag of a sweep row: the target id, ``near:<id>`` for slow approaches
    to a finite equilibrium, or the raw termination."""
    if row.termination.startswith("converged") and row.target_id:
        return row.target_id
    if row.termination == "reached-tau-limit" and row.trajectory is not None:
        end = row.trajectory.states[-1]
        for tg in targets:
            if not tg.on_horizon and np.linalg.norm(end - np.asarray(tg.location)) <= NEAR_RADIUS:
                return f"near:{tg.id}"
    return row.termination


def _chain_tag(tr) -> str:
    return tr.target_id if tr.converged and tr.target_id else tr.termination


def _horizon_series(src: Source, field: DesingField) -> list:
    if field.chart.kind == "global" and src.dimension == 2:
        phi = np.linspace(0.0, 2.0 * np.pi, 721)
        pts = np.array([cp.project_to_horizon(src.scheme, (math.cos(p), math.sin(p))) for p in phi])
        return [Series(pts[:, 0], pts[:, 1], color="#000000", width=1.5)]
    if field.chart.kind == "directional" and src.dimension == 2:
        i = field.chart.index
        b = src.scenario.boundary if src.scenario is not None else {}
        lo, hi = b.get("rho1", 0.0), b.get("rho2", 1.0)
        xs, ys = ([lo, hi], [0.0, 0.0]) if i == 1 else ([0.0, 0.0], [lo, hi])
        return [Series(xs, ys, color="#000000", width=1.5)]
    return []


# ----------------------------------------------------------------------
# plot
def cmd_plot(args) -> int:
    try:
        with open(args.csv, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read CSV: {exc}") from None
    if not rows:
        raise InputError("CSV is empty")
    header = rows[0]
    if len(header) < 4 or header[:2] != ["tau", "t"] or header[-1] != "p":
        raise InputError("CSV does not follow the trajectory schema tau,t,<coords>,p")
    coords = header[2:-1]
    xcol = args.x or ("t" if len(coords) == 1 else coords[0])
    ycol = args.y or (coords[0] if len(coords) == 1 else coords[1])
    try:
        table = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, len(header))
    except ValueError:
        raise InputError("malformed numeric row in CSV") from None
    data = np.stack([_plot_column(args, header, table, xcol), _plot_column(args, header, table, ycol)], axis=1)
    equal = xcol in coords and ycol in coords and "r" not in (xcol, ycol)
    svg = render_svg([Series(data[:, 0], data[:, 1])], title=os.path.basename(args.csv), xlabel=xcol, ylabel=ycol,
                     equal_aspect=equal)
    _emit(svg, args.svg or args.out)
    return EXIT_OK


def _plot_column(args, header: list, table: np.ndarray, col: str) -> np.ndarray:
    if col in header:
        return table[:, header.index(col)]
    coords = header[2:-1]
    if col.startswith("y") and col[1:].isdigit() and coords == [f"x{i + 1}" for i in range(len(coords))]:
        i = int(col[1:]) - 1
        if not 0 <= i < len(coords):
            raise InputError(f"column {col!r} is out of range")
        if not args.alpha:
            raise InputError("original coordinates need the type: pass --alpha (and --scheme-a if not all ones)")
        alpha = tuple(int(v) for v in _floats(args.alpha, "--alpha"))
        if len(alpha) != len(coords):
            raise InputError("--alpha length differs from the number of coordinates")
        sch = cp.make_scheme(alpha, _scheme_a(args, alpha, None))
        out = np.full(table.shape[0], np.nan)
        for m, row in enumerate(table[:, 2:-1]):
            try:
                out[m] = cp.decompactify(sch, row)[i]
            except QHError:
                pass  # horizon points have no finite preimage
        return out
    raise InputError(f"unknown column {col!r}; available: {', '.join(header)}")


# ----------------------------------------------------------------------
def cmd_scenario(args) -> int:
    if args.action != "list":
        raise InputError("only 'scenario list' is supported")
    for name, doc in list_scenarios():
        sys.stdout.write(f"{name:<10} {doc}\n")
    return EXIT_OK


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("global options")
    g.add_argument("--scheme-a", help="comma-separated weights a of the compactification")
    g.add_argument("--tol-rel", type=float, help="relative integration tolerance (default 1e-10)")
    g.add_argument("--tol-abs", type=float, help="absolute integration tolerance (default 1e-12)")
    g.add_argument("--tau-max", type=float, help="desingularized-time horizon of integrations")
    g.add_argument("--jobs", type=int, default=1, help="worker processes for portrait sweeps")
    g.add_argument("--out", help="output file (default: standard output)")


def _source(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model selection")
    g.add_argument("--scenario", help="registered scenario (see 'scenario list')")
    g.add_argument("--model", help="JSON model document")
    g.add_argument("--n", type=int, help="Lienard exponent n")
    g.add_argument("--rho1", type=float, help="two-fluid density rho1")
    g.add_argument("--rho2", type=float, help="two-fluid density rho2")
    g.add_argument("--uL", help="two-fluid left state as beta,1/v")
    g.add_argument("--uR", help="two-fluid right state as beta,1/v")
    g.add_argument("--branch", choices=("L", "R"), help="two-fluid branch constants (default L)")
    g.add_argument("--alpha", help="select a detected type alpha, e.g. 1,2")
    g.add_argument("--alpha-max", type=int, default=4, help="largest type entry searched (default 4)")
    g.add_argument("--chart", help="global | quasi-polar | directional:<i>:<+|->")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qhblowup", description="Blow-up analysis by quasi-homogeneous compactification")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="signatures, scheme, horizon equilibria and their classification")
    _source(a)
    _common(a)
    a.add_argument("--json", action="store_true", help="print the JSON report instead of the table")
    a.set_defaults(func=cmd_analyze)

    b = sub.add_parser("blowup", help="integrate one trajectory and estimate its blow-up time and rate")
    _source(b)
    _common(b)
    b.add_argument("--x0", help="initial point in original coordinates, comma-separated")
    b.add_argument("--chart-coords", action="store_true",
                   help="--x0 is given in compactified chart coordinates instead of original ones")
    b.add_argument("--backward", action="store_true", help="integrate in backward time")
    b.add_argument("--csv", help="write the trajectory CSV here")
    b.set_defaults(func=cmd_blowup)

    q = sub.add_parser("portrait", help="sweep a grid of starts and tag their limit sets")
    _source(q)
    _common(q)
    q.add_argument("--grid", type=int, default=9, help="grid points per axis (0 gives an empty sweep)")
    q.add_argument("--svg", help="render the trajectories and the horizon to this SVG file")
    q.set_defaults(func=cmd_portrait, backward=False)

    r = sub.add_parser("plot", help="render a trajectory CSV as SVG")
    r.add_argument("csv", help="trajectory CSV (tau,t,<coords>,p)")
    r.add_argument("--x", help="column for the horizontal axis")
    r.add_argument("--y", help="column for the vertical axis")
    r.add_argument("--svg", help="output SVG file")
    r.add_argument("--alpha", help="type alpha, needed to plot original coordinates y<i> of a global-chart CSV")
    _common(r)
    r.set_defaults(func=cmd_plot)

    s = sub.add_parser("scenario", help="registered scenarios")
    s.add_argument("action", choices=("list",))
    s.set_defaults(func=cmd_scenario)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) is not None and getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    for flag in ("tol_rel", "tol_abs"):
        v = getattr(args, flag, None)
        if v is not None and not v > 0:
            parser.error(f"--{flag.replace('_', '-')} must be positive")
    try:
        return args.func(args)
    except InputError as exc:
        sys.stderr.write(f"qhblowup: error: {exc}\n")
        return EXIT_PARSE
    except QHError as exc:
        sys.stderr.write(f"qhblowup: numeric failure: {exc}\n")
        return EXIT_NUMERIC
    except (FloatingPointError, ArithmeticError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"qhblowup: numeric failure: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
