import numpy as np
import pytest

from g2flow.grids import PeriodicGrid3
from g2flow.monge_ampere import (
    NotIntegrable, box_hessian, ma_state, path_discrepancy, potential_from_hessian, verify_ma,
)
from g2flow.torus_flow import torsion_coeffs_torus


def test_quadratic_potential_recovered_exactly():
    m, h = 12, 0.1
    x = np.arange(m) * h
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    Q = np.array([[2.0, 0.5, 0], [0.5, 1.0, 0.2], [0, 0.2, 3.0]])
    H = np.broadcast_to(Q, (m, m, m, 3, 3)).copy()
    pf = potential_from_hessian(H, h)
    pts = np.stack([X, Y, Z], -1)
    rho = 0.5 * np.einsum("...i,ij,...j->...", pts, Q, pts)
    assert np.max(np.abs(pf.rho - rho)) < 1e-12
    assert np.max(np.abs(box_hessian(pf.rho, h) - Q)) < 1e-10


def test_smooth_hessian_recovers_potential():
    m, h = 21, 0.05
    x = np.arange(m) * h
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    # rho = sin(x) sin(y) + z^2: Hessian entries written out
    H = np.zeros((m, m, m, 3, 3))
    H[..., 0, 0] = H[..., 1, 1] = -np.sin(X) * np.sin(Y)
    H[..., 0, 1] = H[..., 1, 0] = np.cos(X) * np.cos(Y)
    H[..., 2, 2] = 2.0
    pf = potential_from_hessian(H, h)
    rho = np.sin(X) * np.sin(Y) + Z**2
    # rho(0) = 0 and grad rho(0) = 0 already, matching the gauge of the sweep
    assert np.max(np.abs(pf.rho - rho)) < 5e-3
    assert path_discrepancy(H[..., 0, :], h) < 1e-2


def test_non_integrable_is_rejected():
    m, h = 10, 0.1
    x = np.arange(m) * h
    X = np.meshgrid(x, x, x, indexing="ij")[0]
    H = np.broadcast_to(np.eye(3), (m, m, m, 3, 3)).copy()
    # h_11 depending on x^1 while h_10 = 0 breaks d h_1a / dx^b symmetry
    H[..., 1, 1] += 0.1 * X
    with pytest.raises(NotIntegrable):
        potential_from_hessian(H, h)
    with pytest.raises(NotIntegrable):
        potential_from_hessian(H, h, periodic=True)


def test_ma_state_is_torsion_free_with_constant_det():
    st = ma_state(PeriodicGrid3(16), np.diag([1.0, 2.0, 3.0]))
    assert max(torsion_coeffs_torus(st).values()) < 1e-10
    _, res, mean = verify_ma(st)
    assert res < 1e-10 and abs(mean - 6.0) < 1e-10


def test_perturbed_ma_state_is_rejected():
    st = ma_state(PeriodicGrid3(16), amplitude=0.05, seed=1)
    with pytest.raises(ValueError, match="torsion"):
        verify_ma(st)


def test_save_potential(tmp_path):
    from g2flow.snapshot import read_snapshot
    pf, _, _ = verify_ma(ma_state(PeriodicGrid3(8)))
    pf.save(tmp_path / "rho.g2f")
    header, data = read_snapshot(tmp_path / "rho.g2f")
    assert header["kind"] == "scalar3" and np.array_equal(data, pf.rho)
