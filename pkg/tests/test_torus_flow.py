import numpy as np
import pytest

from g2flow.grids import PeriodicGrid3
from g2flow.integrate import evolve, rk4_step
from g2flow.linalg3 import det3
from g2flow.torus_flow import (
    TorusState, constraints_torus, cross_check_exterior, det_rate_residual, diagnostics, double_curl_state,
    rhs_fn, rhs_torus, smooth_spd_field, torsion_coeffs_torus, wave_residual,
)


@pytest.fixture(scope="module")
def state():
    return double_curl_state(PeriodicGrid3(16), seed=2, amplitude=0.1, a_amplitude=0.05)


def test_flat_state_is_stationary():
    st = TorusState.flat(PeriodicGrid3(8), np.diag([1.0, 2.0, 0.5]))
    da, dS = rhs_torus(st)
    assert np.max(np.abs(da)) == 0 and np.max(np.abs(dS)) == 0
    assert max(torsion_coeffs_torus(st).values()) < 1e-15


def test_double_curl_data_satisfies_constraints(state):
    _, c_sym, c_div = constraints_torus(state)
    assert c_sym < 1e-13 and c_div < 1e-13


def test_explicit_canonical_lapse_matches_default(state):
    f = np.sqrt(det3(state.S))
    for x, y in zip(rhs_torus(state), rhs_torus(state, f)):
        assert np.allclose(x, y, atol=1e-14)
    with pytest.raises(ValueError):
        rhs_torus(state, -f)


def test_cross_check_shrinks_with_h():
    errs = []
    for n in (8, 16, 32):
        st = double_curl_state(PeriodicGrid3(n), seed=4, amplitude=0.1, a_amplitude=0.05)
        errs.append(max(cross_check_exterior(st).values()))
    assert errs[0] / errs[1] > 3 and errs[1] / errs[2] > 3


def test_wave_residual_is_second_order_in_dt(state):
    res = []
    for dt in (4e-3, 2e-3, 1e-3):
        s1 = rk4_step(state, rhs_fn(), dt)
        s2 = rk4_step(s1, rhs_fn(), dt)
        res.append(np.max(np.abs(wave_residual((state, s1, s2), dt))))
    assert 3.4 < res[0] / res[1] < 4.6 and 3.4 < res[1] / res[2] < 4.6


def test_det_rate_identity(state):
    dt = 1e-3
    s1 = rk4_step(state, rhs_fn(), dt)
    s2 = rk4_step(s1, rhs_fn(), dt)
    assert np.max(np.abs(det_rate_residual(state, s2, s1, dt))) < 1e-5


def test_smooth_spd_field_is_spd():
    S = smooth_spd_field(PeriodicGrid3(8), 0)
    assert np.all(np.linalg.eigvalsh(S) > 0)


def test_diagnostics_row_has_csv_columns(state):
    from g2flow.torus_flow import CSV_COLUMNS
    assert tuple(diagnostics(state).row()) == tuple(CSV_COLUMNS)


def test_short_run_keeps_det_positive(state):
    traj = evolve(state, 0.05, 1e-2, rhs_fn(), lambda s: diagnostics(s).row())
    assert traj.status == "ok" and traj.column("detS_min").min() > 0
