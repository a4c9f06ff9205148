"""Fixed-step RK4 time integration, guard handling and convergence studies.

States are frozen dataclasses that list their evolving fields in ``EVOLVING``
(and the symmetric ones in ``SYMMETRIC``).  A right-hand side maps a state to
a tuple of derivatives in the same order, so one stepper serves the torus,
SO(3), SU(2) and radial systems alike.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .grids import PeriodicGrid3
from .linalg3 import det3
from .torus_flow import GuardViolation

GUARD_MIN = 1e-8


def _symmetrize(x: np.ndarray) -> np.ndarray:
    return 0.5 * (x + np.swapaxes(x, -1, -2))


def _shifted(state, k, c):
    return replace(state, t=state.t + c[0], **{
        name: getattr(state, name) + c[1] * dk for name, dk in zip(state.EVOLVING, k)})


def rk4_step(state, rhs: Callable, dt: float):
    """One classical RK4 step; symmetric fields are averaged with their transpose afterwards."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    k1 = rhs(state)
    k2 = rhs(_shifted(state, k1, (dt / 2, dt / 2)))
    k3 = rhs(_shifted(state, k2, (dt / 2, dt / 2)))
    k4 = rhs(_shifted(state, k3, (dt, dt)))
    new = {}
    for i, name in enumerate(state.EVOLVING):
        y = getattr(state, name) + dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i])
        new[name] = _symmetrize(y) if name in state.SYMMETRIC else y
    return replace(state, t=state.t + dt, **new)


def guard_value(state) -> float:
    """Smallest positivity quantity: det S for matrix states, min(f, g, k, l) for radial ones."""
    if hasattr(state, "min_positive"):
        return state.min_positive()
    return float(np.min(det3(state.S)))


@dataclass
class Trajectory:
    dt: float
    scheme: str = "rk4"
    lapse: str = "canonical"
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    status: str = "running"
    message: str = ""
    steps: int = 0

    @property
    def final(self):
        return self.states[-1] if self.states else None

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)


def evolve(state, t_final: float, dt: float, rhs: Callable, diagnose: Callable | None = None,
           sample_every: int = 1, keep_states: bool = False, guard: float = GUARD_MIN,
           on_sample: Callable | None = None, post_step: Callable | None = None,
           lapse: str = "canonical") -> Trajectory:
    """Integrate to ``t_final`` with fixed steps, sampling diagnostics every ``sample_every`` steps.

    A guard trip (positivity below ``guard`` or a :class:`GuardViolation` raised
    by the RHS) stops the run with ``status = "guard"`` and records a last
    diagnostic row when one can still be computed.  ``post_step`` can modify
    the state after each step (constraint projection, for instance).
    """
    if dt <= 0 or t_final < 0:
        raise ValueError("need dt > 0 and t_final >= 0")
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    nsteps = int(round(t_final / dt))
    if abs(nsteps * dt - t_final) > 1e-9 * max(1.0, t_final):
        raise ValueError(f"t_final = {t_final} is not a multiple of dt = {dt}")
    traj = Trajectory(dt=dt, lapse=lapse)
    t0 = state.t

    def sample(st, step):
        traj.times.append(st.t)
        if keep_states or not traj.states:
            traj.states.append(st)
        else:
            traj.states[-1:] = [st] if len(traj.states) > 1 else [traj.states[0], st]
        if diagnose is not None:
            traj.rows.append(diagnose(st))
        if on_sample is not None:
            on_sample(step, st)

    sample(state, 0)
    for step in range(1, nsteps + 1):
        try:
            nxt = rk4_step(state, rhs, dt)
            nxt = replace(nxt, t=t0 + step * dt)
            if post_step is not None:
                nxt = post_step(nxt)
            g = guard_value(nxt)
            if not g >= guard:
                raise GuardViolation(f"positivity guard {g:.3e} < {guard:g} at t = {nxt.t:.6g}")
        except GuardViolation as exc:
            traj.status, traj.message, traj.steps = "guard", str(exc), step - 1
            if step - 1 != (len(traj.times) - 1) * sample_every:
                try:
                    sample(state, step - 1)
                except GuardViolation:
                    pass
            return traj
        state = nxt
        if step % sample_every == 0 or step == nsteps:
            sample(state, step)
    traj.status, traj.steps = "ok", nsteps
    return traj


# ---------------------------------------------------------------------------
# convergence studies

@dataclass(frozen=True)
class ConvergenceResult:
    resolutions: tuple
    errors: tuple
    nominal: float
    slope: float | None
    at_floor: bool
    flagged: bool

    def summary(self) -> str:
        if self.at_floor:
            return "at floor"
        tag = " (deviates from nominal)" if self.flagged else ""
        return f"order {self.slope:.2f}{tag}"


def observed_order(resolutions: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(resolution)."""
    return float(np.polyfit(np.log(resolutions), np.log(errors), 1)[0])


def convergence_study(measure, resolutions: Sequence[float], nominal: float = 2.0,
                      floor: float = 1e-12, tolerance: float = 0.3) -> ConvergenceResult:
    """Measure an error at each resolution (a spacing or step size) and fit the order.

    ``measure`` is either a callable ``resolution -> error`` or a sequence of
    precomputed errors.
    """
    res = tuple(float(r) for r in resolutions)
    if len(res) < 3:
        raise ValueError(f"a convergence study needs at least 3 resolutions, got {len(res)}")
    errs = tuple(float(e) for e in (measure if not callable(measure) else map(measure, res)))
    if len(errs) != len(res):
        raise ValueError("one error per resolution is required")
    if max(errs) <= floor:
        return ConvergenceResult(res, errs, nominal, None, True, False)
    slope = observed_order(res, [max(e, 1e-300) for e in errs])
    return ConvergenceResult(res, errs, nominal, slope, False, abs(slope - nominal) > tolerance)


# ---------------------------------------------------------------------------
# optional constraint projection for torus runs

def _modified_wavenumbers(grid: PeriodicGrid3) -> np.ndarray:
    k = 2 * np.pi * np.fft.fftfreq(grid.n, d=grid.h)
    h = grid.h
    if grid.order == 2:
        return np.sin(k * h) / h
    return (8 * np.sin(k * h) - np.sin(2 * k * h)) / (6 * h)


def project_divergence(st):
    """Remove the discrete row divergence of S by subtracting a symmetrised gradient.

    S <- S - (d_i psi_j + d_j psi_i) where, mode by mode with the modified
    wavenumbers kappa of the difference stencil, -(|kappa|^2 I + kappa kappa^T) psi = div S.
    Frame derivatives of a constant coframe e rescale kappa by e^{-T}.
    """
    from .torus_flow import divergence

    grid = st.grid
    kap1 = _modified_wavenumbers(grid)
    kap = np.stack(np.meshgrid(kap1, kap1, kap1, indexing="ij"), axis=-1) @ np.linalg.inv(st.e)
    v = np.fft.fftn(divergence(st.S, st), axes=(0, 1, 2))
    k2 = np.sum(kap**2, axis=-1)
    M = -(k2[..., None, None] * np.eye(3) + kap[..., :, None] * kap[..., None, :])
    M[k2 == 0] = -np.eye(3)
    psi_hat = np.linalg.solve(M, v[..., None])[..., 0]
    psi_hat[k2 == 0] = 0
    grad_hat = 1j * kap[..., :, None] * psi_hat[..., None, :]          # d_i psi_j
    corr = np.real(np.fft.ifftn(grad_hat + np.swapaxes(grad_hat, -1, -2), axes=(0, 1, 2)))
    return replace(st, S=st.S - corr)


def richardson_ratio(coarse: float, fine: float, finer: float) -> float:
    """(y_h - y_{h/2}) / (y_{h/2} - y_{h/4}); about 2^p for an order-p method."""
    den = fine - finer
    return math.inf if den == 0 else (coarse - fine) / den
