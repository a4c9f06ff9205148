"""Two symmetry reductions: left-invariant data on SU(2), and radial data.

Both are evaluated once through their own ODE/PDE and once through the general
SO(3) right-hand side, which only sees pointwise jets of the frame.
"""
# %% SU(2): a round start with A = lam I, S = s I
import numpy as np

from g2flow import so3_flow as so3
from g2flow.checks import RADIAL_GRID, commuting_su2
from g2flow.integrate import evolve

st = so3.Su2State(1.3 * np.eye(3), 0.8 * np.eye(3))
dA, dS = so3.su2_reduced_rhs(st)
print("dlam/dt =", dA[0, 0], " ds/dt =", dS[0, 0], " (-s^3 + 1/(4 lam^2) =", -0.8**3 + 0.25 / 1.3**2, ")")
dA2, dS2 = so3.su2_rhs_via_so3(st)
print("general RHS agrees to", max(np.max(np.abs(dA - dA2)), np.max(np.abs(dS - dS2))))

# %% Curvature of a squashed sphere against Milnor's formulas
p = [0.7, 1.1, 1.6]
_, Om = so3.torsion_curvature(so3.su2_frame_data(so3.Su2State(np.diag(p), np.eye(3))))
print("Omega - Einstein tensor:", np.max(np.abs(Om - so3.milnor_einstein(p))))

# %% [S, B] = 0 is carried along by the flow
st = commuting_su2(np.random.default_rng(0))
traj = evolve(st, 0.4, 0.01, so3.su2_reduced_rhs, lambda s: {"c": np.max(np.abs(so3.su2_commutator(s)))})
print("max |[S, B]| along the run:", traj.column("c").max())

# %% Radial reduction. The flat family is exact for the discrete equations...
flat = so3.radial_flat(RADIAL_GRID)
print("fifth-equation residual on flat data:", np.max(np.abs(so3.radial_constraint(flat))))

# ...but as an evolution problem the system is elliptic in (t, r): rounding
# errors at the grid scale grow exponentially, and the positivity guard stops
# the run well before t = 0.5 on 257 points.
traj = evolve(flat, 0.5, 1e-3, so3.radial_rhs_fn, lambda s: so3.radial_diagnostics(s, (1.0, 1.0)),
              sample_every=25)
for t, e in zip(traj.times, traj.column("err_vs_flat")):
    print(f"t={t:.3f}  error vs closed form {e:.1e}")
print("status:", traj.status, "-", traj.message)
