import math
from fractions import Fraction

import numpy as np
import pytest

from qhblowup import compactify as cp
from qhblowup.desing import directional_chart, make_desing, quasi_polar_chart
from qhblowup.errors import ChartError, NotACycleError, UnsupportedError
from qhblowup.infinity import (
    classify,
    eigenvalues,
    find_horizon_equilibria,
    horizon_cycle_analysis,
    horizon_seeds,
    linearize,
    predict_blowup_exponents,
)
from qhblowup.qhfield import PolyVectorField

S3 = math.sqrt(3.0)
P1 = (((15 + 3 * S3) / 22) ** 0.25, math.sqrt((7 - 3 * S3) / 44))
P2 = (((15 - 3 * S3) / 22) ** 0.25, math.sqrt((7 + 3 * S3) / 44))
KK_POINTS = {"p1+": P1, "p1-": (-P1[0], P1[1]), "p2+": P2, "p2-": (-P2[0], P2[1])}
KK_CLASSES = {"p1+": "sink", "p1-": "source", "p2+": "saddle(1,1)", "p2-": "saddle(1,1)"}


def by_name(eqs):
    out = {}
    for name, ref in KK_POINTS.items():
        match = [e for e in eqs if np.linalg.norm(e.location - np.array(ref)) < 1e-8]
        assert len(match) == 1, name
        out[name] = match[0]
    return out


@pytest.mark.parametrize(
    "eigs,label",
    [
        ([-1.0, -2.0], ("sink", 2, 0)),
        ([1.0, 2.0 + 1j], ("source", 0, 2)),
        ([-1.0, 0.5, 3.0], ("saddle(1,2)", 1, 2)),
        ([-1.0, 1e-9], ("nonhyperbolic", 1, 0)),
        ([1j, -1j], ("nonhyperbolic", 0, 0)),
    ],
)
def test_classify(eigs, label):
    assert classify(eigs) == label


def test_classify_margin():
    assert classify([-1.0, 1e-5], margin=1e-6)[0] == "saddle(1,1)"
    assert classify([-1.0, 1e-5], margin=1e-4)[0] == "nonhyperbolic"
    with pytest.raises(ValueError):
        classify([1.0], margin=0.0)


def test_eigenvalues():
    np.testing.assert_array_equal(eigenvalues([[2.0, 5.0], [0.0, -1.0]]), [2.0, -1.0])
    ev = eigenvalues([[0.0, -2.0], [2.0, 0.0]])
    np.testing.assert_allclose(ev, [-2j, 2j], atol=1e-15)
    J = np.array([[1.0, 2.0, 0.0], [0.5, -1.0, 1.0], [0.0, 0.3, 2.0]])
    np.testing.assert_allclose(np.sort_complex(eigenvalues(J)), np.sort_complex(np.linalg.eigvals(J)), atol=1e-12)


def test_kk_equilibria(kk_equilibria):
    assert len(kk_equilibria) == 4
    named = by_name(kk_equilibria)
    for name, eq in named.items():
        np.testing.assert_allclose(eq.location, KK_POINTS[name], atol=1e-10)
        assert eq.classification == KK_CLASSES[name]
        assert eq.residual < 1e-10


def test_kk_search_is_reproducible_per_seed(kk_field, kk_equilibria):
    a = find_horizon_equilibria(kk_field, rng_seed=7)
    b = find_horizon_equilibria(kk_field, rng_seed=7)
    np.testing.assert_array_equal([e.location for e in a], [e.location for e in b])
    # a different seed order finds the same set (representatives may differ in the last bit)
    np.testing.assert_allclose([e.location for e in a], [e.location for e in kk_equilibria], atol=1e-14)


def test_kk_symmetry_of_spectra(kk_equilibria):
    named = by_name(kk_equilibria)
    # k = 1: g(iota x) = -iota g(x), so spectra of symmetric partners are negatives
    for a, b in (("p1+", "p1-"), ("p2+", "p2-")):
        np.testing.assert_allclose(np.sort(named[a].eigenvalues.real), np.sort(-named[b].eigenvalues.real),
                                   atol=1e-8)


def test_global_normal_eigenvalue_is_2c_times_radial_rate(kk_field, kk_equilibria):
    eq = by_name(kk_equilibria)["p1+"]
    pol = kk_field.with_chart(quasi_polar_chart(2))
    mu_r = find_horizon_equilibria(pol)
    mu = {tuple(np.round(e.location, 8)): e for e in mu_r}[tuple(np.round(eq.location, 8))].eigenvalues
    # normal direction of the global chart measures 1 - p^2c; quasi-polar measures r
    assert min(eq.eigenvalues.real) == pytest.approx(2 * kk_field.scheme.c * mu[0].real, rel=1e-6)


def test_quasi_polar_eigenvalues(kk_field):
    eqs = find_horizon_equilibria(kk_field.with_chart(quasi_polar_chart(2)))
    named = by_name(eqs)
    np.testing.assert_allclose(named["p1+"].eigenvalues.real, [-0.7719863801113, -1.130266505985], atol=1e-9)
    np.testing.assert_allclose(named["p2+"].eigenvalues.real, [-0.1726609270826, 0.9434368505431], atol=1e-9)
    for a, b in (("p1+", "p1-"), ("p2+", "p2-")):
        np.testing.assert_allclose(named[a].eigenvalues, -named[b].eigenvalues, atol=1e-10)


def test_directional_eigenvalues_are_time_rescaled(kk_field):
    pol = {tuple(np.round(e.location, 8)): e for e in find_horizon_equilibria(kk_field.with_chart(quasi_polar_chart(2)))}
    for e in find_horizon_equilibria(kk_field.with_chart(directional_chart(0, 1))):
        q = pol[tuple(np.round(e.location, 8))]
        # the chart time variables differ by (r/s)^k = Cs^k at the horizon point
        C = e.location[0] / (e.location[0] ** 4 + 2 * e.location[1] ** 2) ** 0.25
        assert C > 0.0
        np.testing.assert_allclose(e.eigenvalues.real * C**kk_field.k, q.eigenvalues.real, atol=1e-8)
        assert e.classification == q.classification


def test_predicted_exponents(kk_equilibria):
    named = by_name(kk_equilibria)
    comps, norm = predict_blowup_exponents(cp.make_scheme((1, 2), (1, 2), 1), named["p1+"])
    assert comps == (Fraction(-1), Fraction(-2)) and norm == Fraction(-1)
    with pytest.raises(UnsupportedError):
        predict_blowup_exponents(cp.make_scheme((1, 2), (1, 2), 1), named["p1-"])
    comps, _ = predict_blowup_exponents(cp.make_scheme((1, 2), (1, 2), 1), named["p1-"], direction="backward")
    assert comps == (Fraction(-1), Fraction(-2))


def test_vanishing_component_gets_no_exponent():
    F = PolyVectorField(2, [{(1, 1): -1.0}, {(0, 2): 1.0}])  # y1' = -y1 y2, y2' = y2^2
    sch = cp.make_scheme((1, 1), None, 1)
    eqs = find_horizon_equilibria(make_desing(F, sch))
    # (0, +-1) are hyperbolic; the double roots (+-1, 0) are reported once each
    assert len(eqs) == 4
    assert sorted(e.classification for e in eqs) == ["nonhyperbolic", "nonhyperbolic", "sink", "source"]
    top = [e for e in eqs if abs(e.location[0]) < 1e-12 and e.location[1] > 0]
    assert top and top[0].classification == "sink"
    comps, norm = predict_blowup_exponents(sch, top[0])
    assert comps[0] is None and comps[1] == Fraction(-1) and norm == Fraction(-1)


def test_global_chart_refuses_non_c1_horizon():
    F = PolyVectorField(1, [{(2,): 1.0, (1,): 1.0}])
    field = make_desing(F, cp.make_scheme((1,), None, 1))
    with pytest.raises(ChartError):
        linearize(field, [1.0])


def test_riccati_equilibria():
    F = PolyVectorField(1, [{(2,): 1.0}])
    eqs = find_horizon_equilibria(make_desing(F, cp.make_scheme((1,), None, 1)))
    assert [(float(e.location[0]), e.classification) for e in eqs] == [(-1.0, "source"), (1.0, "sink")]


def test_seeds_lie_on_the_horizon():
    sch = cp.make_scheme((1, 2, 3), (1, 1, 1))
    seeds = horizon_seeds(sch, 64)
    assert seeds.shape == (64, 3)
    np.testing.assert_allclose([float(cp.power_sum(sch, s)) for s in seeds], 1.0, atol=1e-12)


def test_explicit_two_fluid(fluid):
    eqs = find_horizon_equilibria(fluid.desing(), theta_range=fluid.seed_theta_range)
    assert [e.classification for e in eqs] == ["saddle(1,1)", "saddle(1,1)"]
    np.testing.assert_allclose(eqs[0].chart_location, [1.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(eqs[0].eigenvalues.real, [-1.0, 0.5], atol=1e-12)
    np.testing.assert_allclose(eqs[1].eigenvalues.real, [0.5, -0.25], atol=1e-12)


def test_lienard_horizon_cycle(lienard2):
    field = lienard2.desing()
    assert find_horizon_equilibria(field) == []
    cyc = horizon_cycle_analysis(field)
    assert cyc.alpha_T < 0.0
    assert cyc.refinement_error < 1e-8
    assert 0.0 < cyc.multiplier < 1.0
    assert cyc.classification == "repelling"
    assert cyc.return_residual < 1e-6
    back = horizon_cycle_analysis(lienard2.desing(reverse=True))
    assert back.classification == "attracting"
    assert back.flow_multiplier == pytest.approx(1.0 / cyc.flow_multiplier, rel=1e-12)


def test_cycle_analysis_depends_only_on_the_type(lienard2):
    # the weights a do not change the quasi-polar chart
    alt = make_desing(lienard2.field, lienard2.schemes["figure"], quasi_polar_chart(3))
    assert horizon_cycle_analysis(alt).alpha_T == pytest.approx(horizon_cycle_analysis(lienard2.desing()).alpha_T,
                                                                abs=1e-12)


def test_cycle_analysis_rejects_horizons_with_equilibria(kk_field):
    with pytest.raises(NotACycleError):
        horizon_cycle_analysis(kk_field.with_chart(quasi_polar_chart(2)))
    with pytest.raises(ChartError):
        horizon_cycle_analysis(kk_field)


def test_equilibrium_json(kk_equilibria):
    d = kk_equilibria[0].to_json()
    assert set(d) >= {"location", "chart", "eigenvalues", "classification", "blowup_exponents"}
    assert all(len(pair) == 2 for pair in d["eigenvalues"])
