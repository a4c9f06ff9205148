import numpy as np
import pytest

from g2flow import so3_flow as so3
from g2flow.checks import levi_civita_residuals, so3_random_state
from g2flow.grids import PeriodicGrid3, RadialGrid1
from g2flow.linalg3 import adjugate, cofactor, det3

I3 = np.eye(3)


def pointwise(a=None, da=None, S=None, tau=None):
    z = np.zeros((3, 3))
    return so3.FrameData(z if tau is None else tau, z if a is None else a, z if da is None else da,
                         I3 if S is None else S, lambda F: np.zeros(F.shape + (3,)))


def test_covariant_derivative_of_multiple_of_identity_vanishes():
    a = np.random.default_rng(0).normal(size=(3, 3))
    assert np.max(np.abs(so3.covariant_d_sym(2.5 * I3, pointwise(a=a)))) < 1e-15


def test_curvature_of_constant_connection_is_cofactor():
    a = np.random.default_rng(1).normal(size=(3, 3))
    _, Om = so3.torsion_curvature(pointwise(a=a))
    assert np.allclose(Om, cofactor(a))


def test_identity_with_minus_identity_curvature_is_stationary_in_s():
    _, dS, _ = so3.frame_rhs(pointwise(da=-I3))
    assert np.max(np.abs(dS)) < 1e-15


def test_levi_civita_solves_zero_torsion_pointwise():
    tau = np.random.default_rng(2).normal(size=(3, 3))
    a = so3.levi_civita_from_tau(tau)
    T, _ = so3.torsion_curvature(pointwise(a=a, tau=tau))
    assert np.max(np.abs(T)) < 1e-14


def test_non_symplectic_group_is_mu_adjugate():
    S = np.diag([1.0, 2.0, 4.0])
    g = so3.torsion_groups_so3(pointwise(S=S))
    assert np.allclose(g["domega.ahat_e"], adjugate(S) / np.sqrt(det3(S)))


@pytest.mark.parametrize("kind", ["conformal", "berger"])
def test_levi_civita_converges(kind):
    coarse, fine = levi_civita_residuals(32, kind), levi_civita_residuals(64, kind)
    for key in coarse:
        # the torsion uses the same stencil as the solve, so it can be exactly zero
        assert fine[key] < 1e-13 or coarse[key] / fine[key] > 3.3


def test_connection_rate_matches_levi_civita_of_moving_coframe():
    errs = []
    for n in (16, 32):
        st = so3_random_state(n, 0)
        de, da, _ = so3.rhs_so3(st)
        eps = 1e-5
        fd = (so3.levi_civita(st.e + eps * de, st.grid) - so3.levi_civita(st.e - eps * de, st.grid)) / (2 * eps)
        errs.append(np.max(np.abs(fd - da)))
    assert errs[1] < 0.02 and errs[0] / errs[1] > 3.3


def test_flat_lattice_state_is_stationary():
    g = PeriodicGrid3(8)
    e = np.broadcast_to(I3, g.shape + (3, 3)).copy()
    st = so3.SO3State.with_levi_civita(g, e, 0.5 * e)
    # S = s I on flat space: dS = -(3 s^2 s - 2 s^3) I = -s^3 I, so only the trivial part moves
    de, da, dS = so3.rhs_so3(st)
    assert np.max(np.abs(da)) < 1e-15
    assert np.allclose(dS, -0.125 * I3)


def test_semicolon_commutator_transposed_form_is_small():
    st = so3_random_state(32, 1)
    fd = so3.grid_frame_data(st)
    assert np.max(np.abs(so3.covariant_commutator(fd, transpose=True))) < 10 * (2 * np.pi / 32) ** 2


# --- SU(2) ---

def test_su2_reduction_matches_general_rhs():
    rng = np.random.default_rng(3)
    for _ in range(5):
        st = so3.Su2State(np.diag(rng.uniform(0.5, 2, 3)), np.diag(rng.uniform(0.5, 2, 3)))
        for x, y in zip(so3.su2_reduced_rhs(st), so3.su2_rhs_via_so3(st)):
            assert np.allclose(x, y, atol=1e-12)


def test_su2_curvature_is_milnor_einstein_tensor():
    p = [0.7, 1.1, 1.6]
    _, Om = so3.torsion_curvature(so3.su2_frame_data(so3.Su2State(np.diag(p), I3)))
    assert np.allclose(Om, so3.milnor_einstein(p), atol=1e-13)


def test_su2_round_sphere_rates():
    lam, s = 2.0, 0.6
    dA, dS = so3.su2_reduced_rhs(so3.Su2State(lam * I3, s * I3))
    assert np.isclose(dA[0, 0], s**2 * lam)
    assert np.isclose(dS[0, 0], -s**3 + 1 / (4 * lam**2))


def test_su2_literal_structure_differs_off_unit_determinant():
    A = 1.3 * I3
    assert not np.allclose(so3.su2_structure(A, literal=True), so3.su2_structure(A))
    assert np.allclose(so3.su2_structure(I3, literal=True), so3.su2_structure(I3))


# --- radial ---

def test_radial_general_rhs_agrees():
    st = so3.radial_flat(RadialGrid1(0.25, 4.25, 65), 1.0, 1.0, 0.3)
    via = so3.radial_rhs_via_so3(st, rho=0.7)
    direct = so3.radial_rhs(st)
    for x, y in zip(via[:4], direct[:4]):
        assert np.allclose(x[1:-1], y[1:-1], atol=1e-10)


def test_radial_perturbed_rhs_agrees_with_general():
    grid = RadialGrid1(0.25, 4.25, 129)
    st = so3.radial_flat(grid)
    bump = 0.05 * np.exp(-((grid.r - 2.0) / 0.5) ** 2)
    st = so3.RadialState(grid, st.f * (1 + bump), st.g, st.k * (1 + bump), st.l)
    via, direct = so3.radial_rhs_via_so3(st), so3.radial_rhs(st)
    for x, y in zip(via[:4], direct[:4]):
        assert np.allclose(x[1:-1], y[1:-1], atol=1e-10)


def test_radial_guard():
    grid = RadialGrid1(0.25, 4.25, 17)
    st = so3.radial_flat(grid)
    bad = so3.RadialState(grid, -st.f, st.g, st.k, st.l)
    with pytest.raises(so3.GuardViolation):
        so3.radial_rhs(bad)
