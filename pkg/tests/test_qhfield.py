import json
import pickle

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qhblowup.errors import InputError
from qhblowup.qhfield import (
    Monomial,
    PolyVectorField,
    check_c1_extension,
    decompose,
    detect_signatures,
    eval_field,
    field_to_json,
    parse_field,
    validate_signature,
    weight,
)
from qhblowup.scenarios import lienard_field

KK = PolyVectorField(2, [{(2, 0): 1.0, (0, 1): -1.0}, {(3, 0): 1.0 / 3.0}])

coord = st.floats(-3.0, 3.0, allow_nan=False)
scale = st.floats(0.2, 5.0, allow_nan=False)


def test_evaluation_matches_closed_form():
    u, v = 1.5, -0.25
    np.testing.assert_allclose(KK([u, v]), [u * u - v, u**3 / 3.0], rtol=1e-15)


def test_duplicate_monomials_merge_and_zeros_drop():
    F = PolyVectorField(1, [[((2,), 1.0), ((2,), 2.0), ((1,), 0.0)]])
    assert F.components == ({(2,): 3.0},)


def test_complex_evaluation_supports_complex_step():
    h = 1e-30
    d = np.imag(eval_field(KK, np.array([2.0 + 1j * h, 1.0]))) / h
    np.testing.assert_allclose(d, [4.0, 4.0], rtol=1e-14)


@pytest.mark.parametrize(
    "comps",
    [
        [{(1,): 1.0}],  # wrong monomial length for n=2
        [{(-1, 0): 1.0}, {}],
    ],
)
def test_malformed_fields_are_rejected(comps):
    with pytest.raises(InputError):
        PolyVectorField(2, comps)


def test_monomial_rejects_negative_exponent():
    with pytest.raises(InputError):
        Monomial((1, -2), 1.0)


def test_weight():
    assert weight((3, 1), (1, 2)) == 5
    assert weight(Monomial((0, 2), 1.0), (1, 3)) == 6


def test_kk_signature_is_unique():
    assert validate_signature(KK, (1, 2)) == 1
    assert detect_signatures(KK, 4) == [((1, 2), 1)]


def test_lienard_signature():
    assert ((1, 3), 2) in detect_signatures(lienard_field(2), 4)
    assert validate_signature(lienard_field(3), (1, 4)) == 3


def test_linear_and_zero_fields_have_no_signature():
    assert detect_signatures(PolyVectorField(2, [{}, {}]), 4) == []
    assert detect_signatures(PolyVectorField(1, [{(1,): 1.0}]), 4) == []


def test_mismatched_offsets_return_none():
    F = PolyVectorField(2, [{(2, 0): 1.0}, {(0, 1): 1.0}])
    assert validate_signature(F, (1, 1)) is None


def test_decompose_rejects_wrong_type():
    with pytest.raises(InputError):
        decompose(KK, (1, 1))


def test_decompose_splits_principal_and_residual():
    F = PolyVectorField(1, [{(2,): 1.0, (0,): 1.0}])
    sig = decompose(F, (1,))
    assert sig.principal.components == ({(2,): 1.0},)
    assert sig.residual.components == ({(0,): 1.0},)
    assert sig.principal + sig.residual == F
    assert list(sig.deficits(0)) == [2, 0]


@given(coord, coord, scale)
def test_principal_part_is_quasi_homogeneous(u, v, s):
    for F, alpha in ((KK, (1, 2)), (lienard_field(2), (1, 3))):
        sig = decompose(F, alpha)
        y = np.array([u, v])
        lhs = sig.principal(np.array([s ** alpha[0] * u, s ** alpha[1] * v]))
        rhs = np.array([s ** (sig.k + alpha[j]) for j in range(2)]) * sig.principal(y)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-9 * max(1.0, float(np.max(np.abs(rhs)))))


def test_c1_certificate():
    assert check_c1_extension(decompose(KK, (1, 2)), 2).ok
    bad = PolyVectorField(1, [{(2,): 1.0, (1,): 1.0}])  # deficit 1 with c = 1
    cert = check_c1_extension(decompose(bad, (1,)), 1)
    assert not cert
    assert cert.violations[0][2] == 1
    # deficit 2c is smooth again
    ok = PolyVectorField(1, [{(2,): 1.0, (0,): 1.0}])
    assert check_c1_extension(decompose(ok, (1,)), 1).ok


def test_json_and_pickle_roundtrip():
    doc = json.loads(json.dumps(field_to_json(KK)))
    assert parse_field(doc) == KK
    assert pickle.loads(pickle.dumps(KK)) == KK


@pytest.mark.parametrize("doc", [{}, {"dimension": 1}, {"dimension": 1, "components": [[{"exponents": [1]}]]}])
def test_parse_errors(doc):
    with pytest.raises(InputError):
        parse_field(doc)
