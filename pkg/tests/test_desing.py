import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from qhblowup import compactify as cp
from qhblowup.desing import (
    GLOBAL,
    DesingField,
    correction_sum,
    directional_chart,
    g_global,
    horizon_field,
    make_desing,
    quasi_polar_chart,
    radial_derivative,
    to_natural,
)
from qhblowup.errors import ChartError, DomainError, InputError
from qhblowup.qhfield import PolyVectorField
from qhblowup.scenarios import lienard_backward_field, lienard_field

KK = PolyVectorField(2, [{(2, 0): 1.0, (0, 1): -1.0}, {(3, 0): 1.0 / 3.0}])
KK_SCHEME = cp.make_scheme((1, 2), (1, 2), 1)
SHIFTED = PolyVectorField(2, [{(2, 0): 1.0, (0, 1): -1.0, (0, 0): 0.5}, {(3, 0): 1.0 / 3.0, (1, 0): 2.0}])

unit = st.floats(-1.0, 1.0, allow_nan=False)
radius = st.floats(0.05, 0.98, allow_nan=False)


def disc_point(sch, u, v, rad):
    h = cp.project_to_horizon(sch, (u, v))
    return np.array([rad ** sch.alpha[i] * h[i] for i in range(sch.dimension)])


@pytest.fixture(scope="module")
def kk():
    return make_desing(KK, KK_SCHEME)


def test_kk_values(kk):
    np.testing.assert_allclose(kk([0.0, 1.0]), [-1.0, 0.0], atol=1e-15)
    x = np.array([2.0**-0.25, 0.5])
    g = kk(x)
    assert g[0] == pytest.approx(1.0 / (2.0 * math.sqrt(2.0)) - 1.0 / 3.0, abs=1e-14)
    assert g[1] == pytest.approx(2.0**-0.25 * (math.sqrt(2.0) / 3.0 - 0.5), abs=1e-14)
    assert g[0] > 0.0 > g[1]


def test_reversal_negates(kk):
    x = np.array([0.3, -0.4])
    np.testing.assert_array_equal(kk.reversed()(x), -kk(x))
    assert kk.reversed().reversed() == kk


def test_lower_order_terms_need_the_disc():
    F = make_desing(SHIFTED, KK_SCHEME)
    assert F.max_deficit == 2
    with pytest.raises(DomainError):
        F([1.0, 1.0])
    # on the horizon only the principal part survives; a rounded horizon point sits
    # ~1e-16 inside, where the deficit-2 terms still carry a factor w^(2/2c) ~ 1e-8
    x = cp.project_to_horizon(KK_SCHEME, (0.7, 0.2))
    principal = make_desing(KK, KK_SCHEME)(x)
    np.testing.assert_allclose(horizon_field(F, x), principal, atol=1e-14)
    np.testing.assert_allclose(F(x), principal, atol=1e-7)
    np.testing.assert_allclose(g_global(F, x, w=0.0), principal, atol=1e-14)


def test_scheme_and_chart_validation():
    with pytest.raises(InputError):
        make_desing(KK, cp.make_scheme((1, 1)))
    with pytest.raises(ChartError):
        make_desing(KK, KK_SCHEME, quasi_polar_chart(3))
    with pytest.raises(InputError):
        DesingField(KK_SCHEME)


def test_k_is_taken_from_the_field():
    F = make_desing(KK, cp.make_scheme((1, 2), (1, 2), 0))
    assert F.k == 1


@given(unit, unit, radius)
def test_radial_law_matches_finite_differences(u, v, rad):
    for F, a in ((KK, (1, 2)), (SHIFTED, (1, 2)), (lienard_field(2), (1, 3))):
        sch = cp.make_scheme((1, a[1]), a)
        field = make_desing(F, sch)
        assume(abs(u) + abs(v) > 1e-3)
        x = disc_point(sch, u, v, rad)
        g = field(x)
        h = 1e-6
        wp = 1.0 - float(cp.power_sum(sch, x + h * g))
        wm = 1.0 - float(cp.power_sum(sch, x - h * g))
        fd = (wp - wm) / (2 * h)
        assert radial_derivative(field, x) == pytest.approx(fd, rel=1e-5, abs=1e-8)


@given(unit, unit)
def test_horizon_is_invariant(u, v):
    assume(abs(u) + abs(v) > 1e-3)
    for F, sch in ((KK, KK_SCHEME), (lienard_field(2), cp.make_scheme((1, 3), (1, 1)))):
        field = make_desing(F, sch)
        x = cp.project_to_horizon(sch, (u, v))
        g = horizon_field(field, x)
        grad = np.array([2 * sch.beta[i] * sch.a[i] * x[i] ** (2 * sch.beta[i] - 1) for i in range(2)])
        assert abs(float(grad @ g)) <= 1e-12 * max(1.0, float(np.linalg.norm(g)))


def test_horizon_field_rejects_interior_points(kk):
    with pytest.raises(DomainError):
        horizon_field(kk, [0.1, 0.1])


@given(unit, unit, radius)
def test_iota_equivariance(u, v, rad):
    for F, sch in ((KK, KK_SCHEME), (lienard_field(2), cp.make_scheme((1, 3), (1, 3)))):
        field = make_desing(F, sch)
        assume(abs(u) + abs(v) > 1e-3)
        x = disc_point(sch, u, v, rad)
        lhs = field(cp.iota_symmetry(sch, x))
        rhs = (-1.0) ** field.k * cp.iota_symmetry(sch, field(x))
        np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_lienard_backward_field_matches_construction(n):
    sch = cp.make_scheme((1, n + 1), (1, n + 1), n)
    field = make_desing(lienard_field(n), sch, reverse=True)
    ref = lienard_backward_field(n)
    rng = np.random.default_rng(n)
    for _ in range(50):
        x = disc_point(sch, *rng.uniform(-1, 1, 2), rng.uniform(0.05, 1.0))
        np.testing.assert_allclose(field(x), ref(x), atol=1e-12)


def test_correction_sum_sign_at_attracting_equilibrium(kk):
    x = np.array([((15 + 3 * math.sqrt(3)) / 22) ** 0.25, math.sqrt((7 - 3 * math.sqrt(3)) / 44)])
    assert correction_sum(kk, x) > 0.0  # the horizon attracts: 1 - p^2c decays


def chart_pushforward(field, chart, x):
    """Chart field obtained by differentiating the coordinate change along the global flow."""
    i, sg = chart.index, chart.sign
    sch = field.scheme

    def to_chart(v):
        return to_natural(cp.global_to_chart(sch, v, i, sg))

    g = field(x)
    h = 1e-6
    dz = (to_chart(x + h * g) - to_chart(x - h * g)) / (2 * h)
    # the two time variables differ by dt = kappa^-k dtau = s^k dtau'
    z = to_chart(x)
    s = z[i]
    kap_inv = cp.inverse_kappa(sch, x)
    return z, dz * s**field.k / kap_inv**field.k


@given(unit, unit, radius)
def test_directional_chart_is_the_same_flow(u, v, rad):
    field = make_desing(KK, KK_SCHEME)
    assume(u > 0.05)
    x = disc_point(KK_SCHEME, u, v, rad)
    chart = directional_chart(0, 1)
    z, expected = chart_pushforward(field, chart, x)
    np.testing.assert_allclose(field.with_chart(chart)(z), expected, rtol=1e-5, atol=1e-7)


def test_quasi_polar_chart_is_the_same_flow():
    sch = cp.make_scheme((1, 3), (1, 1))
    field = make_desing(lienard_field(2), sch)
    pol = field.with_chart(quasi_polar_chart(3))
    from qhblowup.quasitrig import get_table

    tab = get_table(3)
    r, theta = 0.4, 1.1
    C, S = tab(theta)
    y = np.array([C / r, S / r**3])  # original point with quasi-radius 1/r
    # original vector field in (r, theta): r' and theta' by differentiating y(r, theta)
    f = lienard_field(2)(y)
    J = np.array([[-C / r**2, -S / r], [-3 * S / r**4, C**5 / r**3]])
    drdt, dthdt = np.linalg.solve(J, f)
    g = pol(np.array([r, theta]))
    np.testing.assert_allclose(g, np.array([drdt, dthdt]) * r**2, rtol=1e-9)


def test_global_chart_required_for_global_helpers():
    field = make_desing(KK, KK_SCHEME, directional_chart(0, 1))
    with pytest.raises(ChartError):
        g_global(field, [0.1, 0.1])
    assert field.with_chart(GLOBAL).chart == GLOBAL
