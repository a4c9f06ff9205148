import numpy as np
import pytest

from g2flow.exterior import hodge_star, wedge, wedge_all
from g2flow.su3g2 import (
    InvalidStructure, TriplePoint, forms_from_triple, g2_from_family, hodge_star_in_coframe, metric_coframe,
    random_triple, triple_from_forms,
)


def test_psi_wedge_psi_sharp_is_minus_four_volumes():
    for t in [TriplePoint.standard(), random_triple(np.random.default_rng(5))]:
        F = forms_from_triple(t)
        vol = wedge_all([F.omega] * 3) / 6
        assert (wedge(F.psi, F.psi_sharp) + 4 * vol).max_abs() < 1e-12


def test_half_omega_squared_matches_wedge():
    t = random_triple(np.random.default_rng(1))
    F = forms_from_triple(t)
    assert (F.half_om_sq - 0.5 * wedge(F.omega, F.omega)).max_abs() < 1e-12


def test_dual_form_is_hodge_star_with_general_lapse():
    rng = np.random.default_rng(2)
    t = random_triple(rng)
    f = 1.7
    phi, star_phi = g2_from_family(forms_from_triple(t), f)
    assert (hodge_star_in_coframe(phi, metric_coframe(t, f)) - star_phi).max_abs() < 1e-12


def test_standard_triple_orthonormal_star():
    phi, star_phi = g2_from_family(forms_from_triple(TriplePoint.standard()))
    # the standard triple has an identity metric coframe up to reordering
    assert np.allclose(np.abs(np.linalg.det(metric_coframe(TriplePoint.standard()))), 1.0)
    assert (hodge_star_in_coframe(phi, metric_coframe(TriplePoint.standard())) - star_phi).max_abs() < 1e-14


def test_batched_roundtrip():
    t = random_triple(np.random.default_rng(3), 50)
    F = forms_from_triple(t)
    E, S = triple_from_forms(F.omega, F.psi)
    assert np.allclose(E, t.e, atol=1e-12) and np.allclose(S, t.S, atol=1e-12)


def test_invalid_triples():
    with pytest.raises(InvalidStructure):
        TriplePoint(np.diag([1.0, 1.0, 0.0]), np.zeros((3, 3)), np.eye(3))
    with pytest.raises(ValueError):
        TriplePoint(np.eye(3), np.zeros((3, 3)), np.diag([1.0, -1.0, 1.0]))
    with pytest.raises(ValueError):
        g2_from_family(forms_from_triple(TriplePoint.standard()), -1.0)


def test_hodge_star_of_standard_is_consistent():
    F = forms_from_triple(TriplePoint.standard())
    phi, star_phi = g2_from_family(F)
    assert (hodge_star(hodge_star(phi)) - phi).max_abs() == 0
