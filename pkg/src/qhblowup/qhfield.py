"""Sparse polynomial vector fields and their quasi-homogeneous structure.

A field ``f = (f_1, ..., f_n)`` is stored as one ``{exponents: coefficient}``
map per component.  Given a type ``alpha`` the weight of a monomial
``y^e`` is ``sum(alpha_l * e_l)``; a field is asymptotically
quasi-homogeneous of type ``alpha`` and order ``k + 1`` when the heaviest
monomial of every component ``j`` has weight exactly ``k + alpha_j``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InputError

__all__ = [
    "Monomial",
    "PolyVectorField",
    "QHSignature",
    "eval_field",
    "weight",
    "validate_signature",
    "detect_signatures",
    "decompose",
    "check_c1_extension",
    "C1Certificate",
    "parse_field",
    "field_to_json",
]


@dataclass(frozen=True)
class Monomial:
    exponents: tuple[int, ...]
    coefficient: float

    def __post_init__(self) -> None:
        if any(int(e) != e or e < 0 for e in self.exponents):
            raise InputError(f"exponents must be nonnegative integers: {self.exponents}")
        object.__setattr__(self, "exponents", tuple(int(e) for e in self.exponents))
        object.__setattr__(self, "coefficient", float(self.coefficient))


def _normalize_component(terms: Iterable, n: int) -> dict[tuple[int, ...], float]:
    if isinstance(terms, Mapping):
        items = list(terms.items())
    else:
        items = []
        for t in terms:
            if isinstance(t, Monomial):
                items.append((t.exponents, t.coefficient))
            else:
                items.append((tuple(t[0]), t[1]))
    out: dict[tuple[int, ...], float] = {}
    for exps, coef in items:
        exps = tuple(int(e) for e in exps)
        if len(exps) != n:
            raise InputError(f"monomial {exps} has length {len(exps)}, expected {n}")
        if any(e < 0 for e in exps):
            raise InputError(f"negative exponent in {exps}")
        out[exps] = out.get(exps, 0.0) + float(coef)
    return {e: c for e, c in out.items() if c != 0.0}


class PolyVectorField:
    """Immutable sparse polynomial vector field on R^n.

    ``components`` is a sequence of length ``n``; each entry is either a
    mapping ``{exponents: coefficient}`` or an iterable of
    :class:`Monomial` / ``(exponents, coefficient)`` pairs.  Duplicate
    exponent vectors are merged and zero coefficients dropped.
    """

    __slots__ = ("_dimension", "_components", "_arrays")

    def __init__(self, dimension: int, components: Sequence) -> None:
        n = int(dimension)
        if n < 1:
            raise InputError("dimension must be >= 1")
        if len(components) != n:
            raise InputError(f"expected {n} components, got {len(components)}")
        comps = tuple(_normalize_component(c, n) for c in components)
        self._dimension = n
        self._components = comps
        arrays = []
        for comp in comps:
            keys = sorted(comp)
            exps = np.array(keys, dtype=np.int64).reshape(len(keys), n)
            coefs = np.array([comp[k] for k in keys], dtype=float)
            arrays.append((exps, coefs))
        self._arrays = tuple(arrays)

    @property
    def dimension(self) -> int:
        return self._dimension

    @property
    def components(self) -> tuple[dict[tuple[int, ...], float], ...]:
        return tuple(dict(c) for c in self._components)

    def monomials(self, j: int) -> list[Monomial]:
        return [Monomial(e, c) for e, c in sorted(self._components[j].items())]

    def arrays(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Exponent matrix (m, n) and coefficient vector (m,) of component ``j``."""
        return self._arrays[j]

    def is_zero(self) -> bool:
        return all(not c for c in self._components)

    def __call__(self, y) -> np.ndarray:
        return eval_field(self, y)

    def __add__(self, other: "PolyVectorField") -> "PolyVectorField":
        if other.dimension != self.dimension:
            raise InputError("dimension mismatch")
        comps = []
        for a, b in zip(self._components, other._components):
            merged = dict(a)
            for e, c in b.items():
                merged[e] = merged.get(e, 0.0) + c
            comps.append(merged)
        return PolyVectorField(self.dimension, comps)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PolyVectorField):
            return NotImplemented
        return self._dimension == other._dimension and self._components == other._components

    def __hash__(self) -> int:
        return hash((self._dimension, tuple(frozenset(c.items()) for c in self._components)))

    def __repr__(self) -> str:
        return f"PolyVectorField({self._dimension}, {list(self._components)!r})"

    def __reduce__(self):
        return (PolyVectorField, (self._dimension, list(self._components)))


def _monomial_values(exps: np.ndarray, y: np.ndarray) -> np.ndarray:
    if exps.shape[0] == 0:
        return np.zeros(0, dtype=y.dtype)
    return np.prod(y[None, :] ** exps, axis=1)


def eval_field(F: PolyVectorField, y) -> np.ndarray:
    """Evaluate every component of ``F`` at ``y`` (real or complex)."""
    y = np.asarray(y)
    if y.dtype.kind not in "fc":
        y = y.astype(float)
    if y.shape != (F.dimension,):
        raise InputError(f"point has shape {y.shape}, field dimension is {F.dimension}")
    out = np.zeros(F.dimension, dtype=np.result_type(y.dtype, float))
    for j in range(F.dimension):
        exps, coefs = F.arrays(j)
        if coefs.size:
            out[j] = np.dot(coefs, _monomial_values(exps, y))
    return out


def weight(m: Monomial | Sequence[int], alpha: Sequence[int]) -> int:
    exps = m.exponents if isinstance(m, Monomial) else tuple(m)
    if len(exps) != len(alpha):
        raise InputError("exponent and type lengths differ")
    return int(sum(int(a) * int(e) for a, e in zip(alpha, exps)))


def _check_alpha(alpha: Sequence[int], n: int | None = None) -> tuple[int, ...]:
    alpha = tuple(int(a) for a in alpha)
    if n is not None and len(alpha) != n:
        raise InputError(f"type has length {len(alpha)}, expected {n}")
    if any(a < 0 for a in alpha):
        raise InputError("type entries must be nonnegative")
    if not any(alpha):
        raise InputError("type must have at least one positive entry")
    return alpha


def validate_signature(F: PolyVectorField, alpha: Sequence[int]) -> int | None:
    """Return the order index ``k`` of ``F`` for type ``alpha``, or ``None``.

    Every nonzero component must have the same top offset
    ``max(weight) - alpha_j``; that common value is ``k``.  Zero components
    impose no constraint.  ``None`` is returned when the offsets disagree,
    when ``k`` would be negative, or when ``F`` is identically zero.
    """
    alpha = _check_alpha(alpha, F.dimension)
    offsets = set()
    for j in range(F.dimension):
        exps, _ = F.arrays(j)
        if exps.shape[0] == 0:
            continue
        top = int((exps @ np.array(alpha, dtype=np.int64)).max())
        offsets.add(top - alpha[j])
    if len(offsets) != 1:
        return None
    k = offsets.pop()
    return k if k >= 0 else None


def detect_signatures(F: PolyVectorField, alpha_max: int) -> list[tuple[tuple[int, ...], int]]:
    """Enumerate primitive types ``alpha`` (entries <= alpha_max) with ``k >= 1``."""
    if alpha_max < 1:
        raise InputError("alpha_max must be >= 1")
    found = []
    for alpha in itertools.product(range(alpha_max + 1), repeat=F.dimension):
        nz = [a for a in alpha if a]
        if not nz or math.gcd(*nz) != 1:
            continue
        k = validate_signature(F, alpha)
        if k is not None and k >= 1:
            found.append((tuple(alpha), k))
    found.sort(key=lambda ak: (ak[1], ak[0]))
    return found


@dataclass(frozen=True)
class QHSignature:
    alpha: tuple[int, ...]
    k: int
    index_set: tuple[int, ...]
    field: PolyVectorField
    principal: PolyVectorField
    residual: PolyVectorField

    @property
    def order(self) -> int:
        return self.k + 1

    @property
    def dimension(self) -> int:
        return self.field.dimension

    def deficits(self, j: int) -> np.ndarray:
        """``k + alpha_j - weight`` for each stored monomial of component ``j``."""
        exps, _ = self.field.arrays(j)
        return self.k + self.alpha[j] - exps @ np.array(self.alpha, dtype=np.int64)


def decompose(F: PolyVectorField, alpha: Sequence[int], k: int | None = None) -> QHSignature:
    alpha = _check_alpha(alpha, F.dimension)
    k_found = validate_signature(F, alpha)
    if k_found is None or (k is not None and k != k_found):
        raise InputError(f"field is not quasi-homogeneous of type {alpha} with k={k}")
    principal, residual = [], []
    for j, comp in enumerate(F.components):
        top = k_found + alpha[j]
        principal.append({e: c for e, c in comp.items() if weight(e, alpha) == top})
        residual.append({e: c for e, c in comp.items() if weight(e, alpha) != top})
    n = F.dimension
    return QHSignature(
        alpha=alpha,
        k=k_found,
        index_set=tuple(i for i, a in enumerate(alpha) if a > 0),
        field=F,
        principal=PolyVectorField(n, principal),
        residual=PolyVectorField(n, residual),
    )


@dataclass(frozen=True)
class C1Certificate:
    ok: bool
    violations: tuple[tuple[int, Monomial, int], ...] = field(default=())
    """``(component, monomial, deficit)`` for every offending monomial."""

    def __bool__(self) -> bool:
        return self.ok


def check_c1_extension(sig: QHSignature, c: int) -> C1Certificate:
    """Sufficient condition for the global-chart field to be C^1 on the closed disc.

    A monomial of component ``j`` with deficit ``gamma = k + alpha_j - weight``
    contributes ``kappa^{-gamma}``, which is C^1 up to the horizon unless
    ``1 <= gamma <= 2c - 1``.  ``c`` may also be a scheme with a ``c``
    attribute.
    """
    c = int(getattr(c, "c", c))
    bad = []
    for j in range(sig.dimension):
        for m in sig.field.monomials(j):
            gamma = sig.k + sig.alpha[j] - weight(m, sig.alpha)
            if 1 <= gamma <= 2 * c - 1:
                bad.append((j, m, int(gamma)))
    return C1Certificate(ok=not bad, violations=tuple(bad))


def parse_field(doc: Mapping) -> PolyVectorField:
    """Build a field from ``{"dimension": n, "components": [[{...}, ...], ...]}``."""
    try:
        n = int(doc["dimension"])
        comps = []
        for comp in doc["components"]:
            comps.append([(tuple(t["exponents"]), float(t["coefficient"])) for t in comp])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed polynomial field document: {exc}") from exc
    return PolyVectorField(n, comps)


def field_to_json(F: PolyVectorField) -> dict:
    return {
        "dimension": F.dimension,
        "components": [
            [{"exponents": list(m.exponents), "coefficient": m.coefficient} for m in F.monomials(j)]
            for j in range(F.dimension)
        ],
    }
