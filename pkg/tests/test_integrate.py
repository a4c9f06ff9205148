import dataclasses

import numpy as np
import pytest

from g2flow.grids import PeriodicGrid3
from g2flow.integrate import (
    convergence_study, evolve, guard_value, observed_order, project_divergence, richardson_ratio, rk4_step,
)
from g2flow.so3_flow import Su2State, su2_reduced_rhs
from g2flow.torus_flow import TorusState, divergence, double_curl_state, rhs_fn, smooth_spd_field


@dataclasses.dataclass(frozen=True)
class Scalar:
    y: np.ndarray
    t: float = 0.0
    EVOLVING = ("y",)
    SYMMETRIC = ()

    def min_positive(self):
        return float(np.min(self.y))


def test_zero_rhs_is_bit_exact():
    st = double_curl_state(PeriodicGrid3(8), seed=0)
    out = rk4_step(st, lambda s: (np.zeros_like(s.a), np.zeros_like(s.S)), 0.1)
    assert np.array_equal(out.S, st.S) and np.array_equal(out.a, st.a)


def test_local_error_is_fifth_order():
    rhs = lambda s: (s.y * np.cos(s.t),)  # noqa: E731
    exact = lambda t: np.exp(np.sin(t))   # noqa: E731
    errs = [abs(rk4_step(Scalar(np.array([1.0])), rhs, h).y[0] - exact(h)) for h in (0.2, 0.1, 0.05)]
    assert abs(observed_order([0.2, 0.1, 0.05], errs) - 5) < 0.3


def test_richardson_ratio_on_su2_is_sixteen():
    st = Su2State(np.eye(3), np.eye(3))
    ys = [evolve(st, 0.4, dt, su2_reduced_rhs).final.S[0, 0] for dt in (0.04, 0.02, 0.01)]
    assert abs(richardson_ratio(*ys) - 16) < 1.0


def test_guard_stops_run_and_keeps_last_good_state():
    rhs = lambda s: (-np.ones_like(s.y),)  # noqa: E731
    traj = evolve(Scalar(np.array([0.35])), 1.0, 0.1, rhs, lambda s: {"y": float(s.y[0])})
    assert traj.status == "guard" and traj.steps == 3
    assert traj.final.y[0] == pytest.approx(0.05)
    assert guard_value(traj.final) > 0


def test_t_final_must_be_multiple_of_dt():
    with pytest.raises(ValueError):
        evolve(Scalar(np.array([1.0])), 0.25, 0.1, lambda s: (s.y,))


def test_sampling_includes_final_step():
    traj = evolve(Scalar(np.array([1.0])), 0.5, 0.1, lambda s: (0 * s.y,), lambda s: {"t": s.t}, sample_every=2)
    assert traj.column("t") == pytest.approx([0.0, 0.2, 0.4, 0.5])


def test_convergence_study():
    res = convergence_study(lambda h: 3 * h**2, [0.1, 0.05, 0.025])
    assert abs(res.slope - 2) < 1e-12 and not res.flagged and res.summary() == "order 2.00"
    assert convergence_study([1e-15, 2e-15, 1e-15], [1, 2, 3]).summary() == "at floor"
    assert convergence_study([1e-2, 1e-3, 1e-4], [0.1, 0.05, 0.025]).flagged
    with pytest.raises(ValueError):
        convergence_study([1.0, 0.5], [1, 2])


def test_projection_removes_discrete_divergence():
    g = PeriodicGrid3(16)
    st = TorusState(g, np.zeros(g.shape + (3, 3)), smooth_spd_field(g, 0, 0.1))
    before = np.max(np.abs(divergence(st.S, st)))
    after = np.max(np.abs(divergence(project_divergence(st).S, st)))
    assert before > 1e-2 and after < 1e-12


def test_projected_torus_run():
    st = double_curl_state(PeriodicGrid3(8), seed=0)
    traj = evolve(st, 0.02, 0.01, rhs_fn(), post_step=project_divergence)
    assert traj.status == "ok"
