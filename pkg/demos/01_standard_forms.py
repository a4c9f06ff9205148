"""Standard forms on R^7 and the triple that produces them.

Run with ``python demos/01_standard_forms.py``.
"""
# %% The model forms. Every coefficient is +-1, so identities hold exactly.
import numpy as np

from g2flow import su3g2
from g2flow.exterior import change_basis, hodge_star, standard_r7, wedge, wedge_all
from g2flow.checks import _standard_relabel

m = standard_r7()
phi0, star_phi0 = m["phi0"], m["star_phi0"]
print("terms in phi0:", int(np.count_nonzero(phi0.coeffs)))
print("terms in *phi0:", int(np.count_nonzero(star_phi0.coeffs)))
print("hodge_star(phi0) == *phi0:", (hodge_star(phi0, 1) - star_phi0).max_abs() == 0)

# %% omega0 cubed is six volume forms
cube = wedge_all([m["omega0"]] * 3)
print("omega0^3 has", int(np.count_nonzero(cube.coeffs)), "nonzero coefficient(s):", cube.coeffs[np.nonzero(cube.coeffs)])

# %% A triple (e, a, S) builds omega, psi, psi# and 1/2 omega^2.
# The identity triple gives the model forms after relabelling the basis.
phi, star_phi = su3g2.g2_from_family(su3g2.standard_forms())
L = _standard_relabel()
print("phi(standard) - phi0:", (change_basis(phi, L) - phi0).max_abs())

# %% A random triple: psi ^ psi# is always -4 times the volume omega^3/6.
rng = np.random.default_rng(11)
t = su3g2.random_triple(rng)
F = su3g2.forms_from_triple(t)
ratio = wedge(F.psi, F.psi_sharp).coeffs[-1] / (wedge_all([F.omega] * 3).coeffs[-1] / 6)
print(f"psi ^ psi# / vol = {ratio:.12f}")

# %% Recovering (e, S) from (omega, psi)
E, S = su3g2.triple_from_forms(F.omega, F.psi)
print("recovery error e:", np.max(np.abs(E - t.e)), " S:", np.max(np.abs(S - t.S)))
