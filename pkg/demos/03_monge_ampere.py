"""Torsion-free torus data as a Hessian potential with constant determinant."""
# %%
import numpy as np

from g2flow.grids import PeriodicGrid3
from g2flow.monge_ampere import ma_state, verify_ma
from g2flow.torus_flow import torsion_coeffs_torus

st = ma_state(PeriodicGrid3(16), np.diag([1.0, 2.0, 3.0]))
print("torsion groups:", {k: f"{v:.1e}" for k, v in torsion_coeffs_torus(st).items()})
pf, residual, mean = verify_ma(st)
print(f"det Hess rho = {mean:.12f}, spread {residual:.1e}")
print("rho at the far corner:", pf.rho[-1, -1, -1])

# %% A periodic perturbation keeps adj(S) a Hessian but breaks the constant
# determinant, and the torsion check notices.
bumpy = ma_state(PeriodicGrid3(16), amplitude=0.05, seed=2)
print("perturbed torsion groups:", {k: f"{v:.1e}" for k, v in torsion_coeffs_torus(bumpy).items()})
try:
    verify_ma(bumpy)
except ValueError as exc:
    print("rejected:", exc)
