import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from g2flow.linalg3 import (
    NotPositiveDefinite, adjugate, axial, chol_factor, cofactor, det3, eps_contract2, is_posdef, random_spd,
    require_posdef, sym_from_upper, upper_of_sym,
)

mats = arrays(np.float64, (3, 3), elements=st.floats(-3, 3, allow_nan=False))


@settings(max_examples=100, deadline=None)
@given(mats)
def test_adjugate_identity(M):
    assert np.allclose(adjugate(M) @ M, det3(M) * np.eye(3), atol=1e-10)


@settings(max_examples=50, deadline=None)
@given(mats)
def test_cofactor_is_half_eps_contraction(M):
    assert np.allclose(cofactor(M), 0.5 * eps_contract2(M, M), atol=1e-12)
    assert np.allclose(cofactor(M), adjugate(M).T)


def test_det_matches_numpy():
    rng = np.random.default_rng(0)
    M = rng.normal(size=(50, 3, 3))
    assert np.allclose(det3(M), np.linalg.det(M))


def test_axial_vector():
    M = np.array([[0, 3, -2], [-3, 0, 1], [2, -1, 0.0]])
    assert np.allclose(axial(M), [2, 4, 6])


def test_posdef_checks():
    rng = np.random.default_rng(1)
    S = random_spd(rng, 20)
    assert is_posdef(S).all()
    require_posdef(S)
    with pytest.raises(NotPositiveDefinite):
        require_posdef(np.diag([1.0, -1.0, 1.0]))
    Q = chol_factor(S)
    assert np.allclose(Q @ np.swapaxes(Q, -1, -2), S)


def test_upper_roundtrip():
    S = random_spd(np.random.default_rng(2))
    assert np.array_equal(sym_from_upper(upper_of_sym(S)), S)
