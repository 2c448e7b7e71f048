"""Desingularized vector fields in the global and directional charts.

Global chart (time ``d tau = kappa**k dt``)::

    f~_j(x) = kappa**-(k+alpha_j) f_j(kappa**alpha_1 x_1, ...)
    g_i     = f~_i - (sum_{j in I} beta_j a_j x_j**(2 beta_j - 1) f~_j) x_i / beta_i

Every monomial of ``f~_j`` carries ``kappa**-gamma`` with the nonnegative
deficit ``gamma = k + alpha_j - weight``; ``kappa**-1`` is evaluated from
``x`` as ``(1 - p(x)**2c)**(1/2c)``, so nothing is ever decompactified.

Directional charts (time ``d tau_d = s**-k dt``) use the state in *natural
order*: the chart coordinate ``s`` takes the slot of the distinguished
coordinate ``i`` and the remaining slots hold ``theta``.  For the quasi-polar
chart (``n = 2``, ``alpha = (1, l)``) the state is ``(r, theta)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Any, Optional

import numpy as np

from . import compactify as cp
from .compactify import CompactScheme, DirectionalPoint
from .errors import ChartError, DomainError, InputError
from .qhfield import PolyVectorField, QHSignature, decompose

__all__ = [
    "Chart",
    "GLOBAL",
    "directional_chart",
    "quasi_polar_chart",
    "DesingField",
    "make_desing",
    "f_tilde",
    "g_global",
    "g_directional",
    "radial_derivative",
    "horizon_field",
    "time_rescale_factor",
    "to_natural",
    "from_natural",
    "quasi_polar_rhs",
    "correction_sum",
]


@dataclass(frozen=True)
class Chart:
    kind: str  # "global" | "directional" | "quasi-polar"
    index: int = -1
    sign: int = 1
    l: int = 0

    def label(self) -> str:
        if self.kind == "global":
            return "global"
        if self.kind == "directional":
            return f"directional({self.index},{'+' if self.sign > 0 else '-'})"
        return f"quasi-polar(l={self.l})"


GLOBAL = Chart("global")


def directional_chart(i: int, sign: int = 1) -> Chart:
    return Chart("directional", index=int(i), sign=int(sign))


def quasi_polar_chart(l: int) -> Chart:
    return Chart("quasi-polar", l=int(l))


def to_natural(dp: DirectionalPoint) -> np.ndarray:
    return np.insert(np.asarray(dp.theta, dtype=float), dp.chart_index, dp.s)


def from_natural(chart: Chart, z) -> DirectionalPoint:
    z = np.asarray(z, dtype=float)
    return DirectionalPoint(chart.index, chart.sign, float(z[chart.index]), np.delete(z, chart.index))


@dataclass(frozen=True)
class DesingField:
    """An evaluatable desingularized field.

    ``source`` is a :class:`QHSignature` (polynomial source) or an explicit
    picklable callable ``explicit(state) -> derivative`` already written in
    ``chart`` coordinates (scenario-registered).  ``reverse`` negates the
    field, which turns backward-time blow-up into forward convergence.
    """

    scheme: CompactScheme
    chart: Chart = GLOBAL
    sig: Optional[QHSignature] = None
    explicit: Any = None
    reverse: bool = False
    _terms: tuple = dc_field(default=(), repr=False, compare=False)

    def __post_init__(self) -> None:
        if (self.sig is None) == (self.explicit is None):
            raise InputError("exactly one of sig / explicit must be given")
        if self.sig is not None:
            if tuple(self.sig.alpha) != tuple(self.scheme.alpha):
                raise InputError("scheme and signature types differ")
            if self.scheme.k != self.sig.k:
                object.__setattr__(self, "scheme", cp.make_scheme(self.scheme.alpha, self.scheme.a, self.sig.k))
            terms = []
            for j in range(self.sig.dimension):
                exps, coefs = self.sig.field.arrays(j)
                gam = self.sig.deficits(j)
                terms.append((exps, coefs, gam))
            object.__setattr__(self, "_terms", tuple(terms))
        if self.chart.kind == "directional":
            if self.chart.index not in self.scheme.index_set or self.chart.sign not in (1, -1):
                raise ChartError(f"invalid directional chart {self.chart}")
        elif self.chart.kind == "quasi-polar":
            if self.scheme.dimension != 2 or self.scheme.alpha != (1, self.chart.l):
                raise ChartError("quasi-polar charts need n = 2 and alpha = (1, l)")
        elif self.chart.kind != "global":
            raise ChartError(f"unknown chart kind {self.chart.kind!r}")

    # ------------------------------------------------------------------
    @property
    def k(self) -> int:
        return self.scheme.k

    @property
    def dimension(self) -> int:
        return self.scheme.dimension

    @property
    def sign(self) -> float:
        return -1.0 if self.reverse else 1.0

    @property
    def max_deficit(self) -> int:
        if not self._terms:
            return 0
        return int(max((int(g.max()) for _, _, g in self._terms if g.size), default=0))

    def with_chart(self, chart: Chart) -> "DesingField":
        if self.explicit is not None:
            raise ChartError("explicit fields are bound to their registered chart")
        return DesingField(self.scheme, chart, self.sig, None, self.reverse)

    def reversed(self) -> "DesingField":
        return DesingField(self.scheme, self.chart, self.sig, self.explicit, not self.reverse)

    def __call__(self, state) -> np.ndarray:
        if self.explicit is not None:
            return self.sign * np.asarray(self.explicit(state))
        if self.chart.kind == "global":
            return g_global(self, state)
        return g_directional(self, state)

    def time_rescale(self, state) -> float:
        return time_rescale_factor(self, state)


def make_desing(F: PolyVectorField | QHSignature, scheme: CompactScheme, chart: Chart = GLOBAL,
                reverse: bool = False) -> DesingField:
    sig = F if isinstance(F, QHSignature) else decompose(F, scheme.alpha)
    return DesingField(scheme=scheme, chart=chart, sig=sig, reverse=reverse)


# ----------------------------------------------------------------------
# global chart
def _monomials(exps: np.ndarray, z: np.ndarray) -> np.ndarray:
    return np.prod(z[None, :] ** exps, axis=1)


def _f_tilde_terms(field: DesingField, x, principal_only: bool = False, tol: float = cp.HORIZON_TOL, w=None):
    x = np.asarray(x)
    if x.dtype.kind not in "fc":
        x = x.astype(float)
    if x.shape != (field.dimension,):
        raise InputError(f"expected a point of length {field.dimension}")
    need_w = not principal_only and field.max_deficit > 0
    if not need_w:
        ikap = 1.0
    elif w is None:
        ikap = cp.inverse_kappa(field.scheme, x, tol)
    else:
        ikap = max(float(w), 0.0) ** (1.0 / (2 * field.scheme.c))
    out = np.zeros(field.dimension, dtype=np.result_type(x.dtype, float))
    for j, (exps, coefs, gam) in enumerate(field._terms):
        if not coefs.size:
            continue
        if principal_only:
            sel = gam == 0
            out[j] = np.dot(coefs[sel], _monomials(exps[sel], x))
        elif need_w:
            out[j] = np.dot(coefs * ikap ** gam, _monomials(exps, x))
        else:
            out[j] = np.dot(coefs, _monomials(exps, x))
    return out


def f_tilde(scheme: CompactScheme, sig: QHSignature | DesingField, x) -> np.ndarray:
    field = sig if isinstance(sig, DesingField) else DesingField(scheme=scheme, sig=sig)
    return _f_tilde_terms(field, x)


def _correction(field: DesingField, x, ft) -> Any:
    sch = field.scheme
    S = 0.0
    for j in sch.index_set:
        b = sch.beta[j]
        S = S + b * sch.a[j] * x[j] ** (2 * b - 1) * ft[j]
    return S


def _assemble(field: DesingField, x, ft) -> np.ndarray:
    sch = field.scheme
    S = _correction(field, x, ft)
    g = ft.copy()
    for i in sch.index_set:
        g[i] = ft[i] - S * x[i] / sch.beta[i]
    return g


def _require_global(field: DesingField) -> None:
    if field.chart.kind != "global" or field.sig is None:
        raise ChartError("operation needs a polynomial-source field in the global chart")


def g_global(field: DesingField, x, w=None) -> np.ndarray:
    """Global-chart desingularized field; raises DomainError outside the closed disc
    whenever the value depends on ``kappa`` (some deficit is positive).

    ``w`` optionally supplies ``1 - p(x)**2c`` (``kappa**-2c``) computed by the
    caller without cancellation, e.g. from an integrated ``log w``.
    """
    _require_global(field)
    x = np.asarray(x)
    if x.dtype.kind not in "fc":
        x = x.astype(float)
    ft = field.sign * _f_tilde_terms(field, x, w=w)
    return _assemble(field, x, ft)


def radial_derivative(field: DesingField, x) -> float:
    """``d/dtau (1 - p**2c) = -2 S(x) (1 - p**2c)`` with ``S`` the correction sum."""
    _require_global(field)
    x = np.asarray(x, dtype=float)
    ft = field.sign * _f_tilde_terms(field, x)
    w = 1.0 - float(cp.power_sum(field.scheme, x))
    if w < 0.0:
        if w < -cp.HORIZON_TOL:
            raise DomainError("point lies outside the closed disc")
        w = 0.0
    return float(-2.0 * _correction(field, x, ft) * w)


def correction_sum(field: DesingField, x, w=None) -> float:
    """``S(x) = sum_j beta_j a_j x_j**(2 beta_j - 1) f~_j``; ``d log(1-p^2c)/dtau = -2 S``."""
    _require_global(field)
    x = np.asarray(x)
    ft = field.sign * _f_tilde_terms(field, x, w=w)
    return _correction(field, x, ft)


def horizon_field(field: DesingField, x, tol: float = 1e-10) -> np.ndarray:
    _require_global(field)
    x = np.asarray(x)
    if x.dtype.kind not in "fc":
        x = x.astype(float)
    p2c = cp.power_sum(field.scheme, x)
    if abs(np.real(p2c) - 1.0) > tol:
        raise DomainError(f"point is not on the horizon (p^2c = {np.real(p2c)!r})")
    ft = field.sign * _f_tilde_terms(field, x, principal_only=True)
    return _assemble(field, x, ft)


# ----------------------------------------------------------------------
# directional charts
def _f_hat(field: DesingField, s, h) -> np.ndarray:
    out = np.zeros(field.dimension, dtype=np.result_type(np.asarray(s).dtype, np.asarray(h).dtype, float))
    for j, (exps, coefs, gam) in enumerate(field._terms):
        if coefs.size:
            out[j] = np.dot(coefs * s ** gam, _monomials(exps, h))
    return out


def _hyperplane_rhs(field: DesingField, z) -> np.ndarray:
    i, sg = field.chart.index, field.chart.sign
    s = z[i]
    h = z.copy()
    h[i] = sg
    fh = field.sign * _f_hat(field, s, h)
    # A = [alpha*h | e_j (j != i)] is triangular in this chart: solve directly
    u = fh[i] / (field.scheme.alpha[i] * sg)
    out = np.empty_like(fh)
    for j in range(field.dimension):
        out[j] = -s * u if j == i else fh[j] - field.scheme.alpha[j] * z[j] * u
    return out


def quasi_polar_rhs(field: DesingField, r, C, S) -> np.ndarray:
    """Quasi-polar field as a function of ``(r, Cs theta, Sn theta)``."""
    l = field.chart.l
    h = np.array([C, S])
    fh = field.sign * _f_hat(field, r, h)
    b1 = C ** (2 * l - 1) * fh[0] + S * fh[1]
    b2 = -l * S * fh[0] + C * fh[1]
    return np.array([-r * b1, b2])


def g_directional(field: DesingField, state) -> np.ndarray:
    if field.explicit is not None:
        return field(state)
    if isinstance(state, DirectionalPoint):
        state = to_natural(state)
    z = np.asarray(state)
    if z.dtype.kind not in "fc":
        z = z.astype(float)
    if z.shape != (field.dimension,):
        raise InputError(f"expected a chart state of length {field.dimension}")
    if field.chart.kind == "directional":
        return _hyperplane_rhs(field, z)
    if field.chart.kind == "quasi-polar":
        from .quasitrig import get_table

        C, S = get_table(field.chart.l)(float(np.real(z[1])))
        return quasi_polar_rhs(field, z[0], C, S)
    raise ChartError("g_directional needs a directional or quasi-polar chart")


# ----------------------------------------------------------------------
def time_rescale_factor(field: DesingField, state) -> float:
    """``dt/dtau``: ``kappa**-k`` in the global chart, ``s**k`` in directional charts."""
    k = field.k
    if field.chart.kind == "global":
        w = 1.0 - float(cp.power_sum(field.scheme, np.asarray(state, dtype=float)))
        return max(w, 0.0) ** (k / (2.0 * field.scheme.c))
    if isinstance(state, DirectionalPoint):
        s = state.s
    else:
        z = np.asarray(state, dtype=float)
        s = z[0] if field.chart.kind == "quasi-polar" else z[field.chart.index]
    return max(float(s), 0.0) ** k
