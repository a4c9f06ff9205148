"""Identity suites run by ``g2flow check``.

Each suite returns a list of :class:`Record` (id, residual, tolerance, pass).
The acceptance tests and the CLI share these, so the numbers printed by one
are the numbers asserted by the other.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import exterior as ex
from . import so3_flow as so3
from . import su3g2
from . import torus_flow as tf
from .grids import PeriodicGrid3, RadialGrid1
from .integrate import evolve


@dataclass(frozen=True)
class Record:
    id: str
    residual: float
    tol: float
    passed: bool

    def as_json(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def record(id_: str, residual, tol: float) -> Record:
    r = float(residual)
    return Record(id_, r, float(tol), bool(r <= tol))


# ---------------------------------------------------------------------------

def _standard_relabel() -> np.ndarray:
    """Basis change (v^k, b^k, dt) -> (dx^k, dy^k, dx^0) as a 7x7 matrix L[old, new]."""
    L = np.zeros((7, 7))
    for k in range(3):
        L[k, 2 * k + 1] = 1.0          # v^k -> x^k
        L[3 + k, 2 * k + 2] = 1.0      # b^k -> y^k
    L[6, 0] = 1.0                      # dt -> x^0
    return L


def suite_su3g2_standard() -> list[Record]:
    m = ex.standard_r7()
    x0 = m["x"][0]
    out = [
        record("phi0 = omega0 ^ dx0 + psi0", (m["phi0"] - ((m["omega0"] ^ x0) + m["psi0"])).max_abs(), 0.0),
        record("*phi0 = -psi0# ^ dx0 + omega0^2/2",
               (m["star_phi0"] - (-(m["psi0_sharp"] ^ x0) + 0.5 * (m["omega0"] ^ m["omega0"]))).max_abs(), 0.0),
        record("hodge_star(phi0) = *phi0", (ex.hodge_star(m["phi0"], 1) - m["star_phi0"]).max_abs(), 0.0),
        record("omega0^3 = 6 vol6", (ex.wedge_all([m["omega0"]] * 3)
                                     - 6 * ex.wedge_all([m["x"][1], m["y"][1], m["x"][2], m["y"][2],
                                                         m["x"][3], m["y"][3]])).max_abs(), 0.0),
    ]
    # the triple-level construction with E = I, A = 0, S = I and lapse 1
    phi, star_phi = su3g2.g2_from_family(su3g2.standard_forms())
    L = _standard_relabel()
    out.append(record("phi(standard triple) = phi0", (ex.change_basis(phi, L) - m["phi0"]).max_abs(), 0.0))
    out.append(record("*phi(standard triple) = *phi0",
                      (ex.change_basis(star_phi, L) - m["star_phi0"]).max_abs(), 0.0))
    return out


def suite_normal_form(count: int = 100, seed: int = 0) -> list[Record]:
    m = ex.standard_r7()
    V = [np.eye(7)[s] for s in (1, 3, 5)]       # d/dx^1, d/dx^2, d/dx^3
    out = [record("normal form phi0, coordinate V", su3g2.normal_form_check(m["phi0"], V, m["star_phi0"]), 0.0)]
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        t = su3g2.random_triple(rng)
        f = float(rng.uniform(0.5, 2.0))
        phi, star_phi = su3g2.g2_from_family(su3g2.forms_from_triple(t), f)
        K = su3g2.metric_coframe(t, f)
        worst = max(worst, su3g2.normal_form_check(phi, su3g2.vertical_frame(t), star_phi, K.T @ K))
    out.append(record(f"normal form, {count} random triples", worst, 1e-11))
    return out


def suite_roundtrip(count: int = 1000, seed: int = 0) -> list[Record]:
    rng = np.random.default_rng(seed)
    t = su3g2.random_triple(rng, count)
    F = su3g2.forms_from_triple(t)
    E, S = su3g2.triple_from_forms(F.omega, F.psi)
    relE = np.max(np.abs(E - t.e)) / np.max(np.abs(t.e))
    relS = np.max(np.abs(S - t.S) / np.max(np.abs(t.S), axis=(-1, -2))[..., None, None])
    return [record(f"roundtrip e, {count} triples", relE, 1e-12),
            record(f"roundtrip S, {count} triples", relS, 1e-12)]


# ---------------------------------------------------------------------------
# commutator identity

COMMUTATOR_C = 10.0


def torus_commutators(n: int, seed: int) -> tuple[float, float]:
    """Max norms of the (literal, transposed) commutator residuals with plain derivatives."""
    grid = PeriodicGrid3(n)
    st = tf.TorusState(grid, np.zeros(grid.shape + (3, 3)), tf.smooth_spd_field(grid, seed))
    lit, tr = tf.commutator_residuals(st.S, lambda F: tf.frame_grad(F, st))
    return float(np.max(np.abs(lit))), float(np.max(np.abs(tr)))


def torus_commutator(n: int, seed: int, transpose: bool) -> float:
    return torus_commutators(n, seed)[1 if transpose else 0]


def so3_random_state(n: int, seed: int) -> so3.SO3State:
    grid = PeriodicGrid3(n)
    rng = np.random.default_rng(seed)
    u = np.stack([so3.trig_field(grid, rng, 0.15) for _ in range(3)], axis=-1)
    e = so3.diagonal_coframe(grid, u)
    return so3.SO3State.with_levi_civita(grid, e, tf.smooth_spd_field(grid, seed))


def so3_commutators(n: int, seed: int) -> tuple[float, float]:
    """Same pair with covariant derivatives on a Berger-type coframe and its Levi-Civita connection."""
    fd = so3.grid_frame_data(so3_random_state(n, seed))
    lit, tr = tf.commutator_residuals(fd.S, lambda F: so3.covariant_d_sym(F, fd))
    return float(np.max(np.abs(lit))), float(np.max(np.abs(tr)))


def so3_commutator(n: int, seed: int, transpose: bool) -> float:
    return so3_commutators(n, seed)[1 if transpose else 0]


def suite_commutator(n: int = 32, seed: int = 0) -> list[Record]:
    tol = COMMUTATOR_C * (2 * np.pi / n) ** 2
    comma, semi = torus_commutators(n, seed), so3_commutators(n, seed)
    return [
        record(f"CS - SC - mu SDS (comma, n={n})", comma[0], tol),
        record(f"CS - SC - mu SDS (semicolon, n={n})", semi[0], tol),
        record(f"CS - SC^T - mu SDS (comma, n={n})", comma[1], tol),
        record(f"CS - SC^T - mu SDS (semicolon, n={n})", semi[1], tol),
    ]


# ---------------------------------------------------------------------------
# SU(2) reduction

def random_diagonal_su2(rng: np.random.Generator) -> so3.Su2State:
    return so3.Su2State(np.diag(rng.uniform(0.5, 2.0, 3)), np.diag(rng.uniform(0.5, 2.0, 3)))


def commuting_su2(rng: np.random.Generator) -> so3.Su2State:
    """Generic A with S a polynomial in B, so that [S, B] = 0 holds initially."""
    A = np.eye(3) + 0.15 * rng.normal(size=(3, 3))
    if np.linalg.det(A) < 0:
        A[0] *= -1
    B = so3.Su2State(A, np.eye(3)).B
    S = np.eye(3) + 0.1 * B / np.max(np.abs(B))
    S = S + 0.05 * (S @ S)
    return so3.Su2State(A, 0.5 * (S + S.T))


def su2_commutator_drift(dt: float, t_final: float = 0.4, seed: int = 0) -> float:
    st = commuting_su2(np.random.default_rng(seed))
    traj = evolve(st, t_final, dt, so3.su2_reduced_rhs,
                  lambda s: {"c": float(np.max(np.abs(so3.su2_commutator(s))))})
    return float(traj.column("c").max())


def suite_red1(count: int = 10, seed: int = 0) -> list[Record]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        st = random_diagonal_su2(rng)
        r1, r2 = so3.su2_reduced_rhs(st), so3.su2_rhs_via_so3(st)
        worst = max(worst, float(np.max(np.abs(r1[0] - r2[0]))), float(np.max(np.abs(r1[1] - r2[1]))))
    out = [record(f"reduced RHS = SO(3) RHS, {count} diagonal states", worst, 1e-11)]
    lam, s = 1.3, 0.8
    dA, dS = so3.su2_reduced_rhs(so3.Su2State(lam * np.eye(3), s * np.eye(3)))
    out.append(record("A = lam I, S = s I: dlam/dt = s^2 lam", abs(dA[0, 0] - s**2 * lam), 1e-14))
    out.append(record("A = lam I, S = s I: ds/dt = -s^3 + 1/(4 lam^2)",
                      abs(dS[0, 0] - (-s**3 + 0.25 / lam**2)), 1e-14))
    _, Om = so3.torsion_curvature(so3.su2_frame_data(so3.Su2State(lam * np.eye(3), np.eye(3))))
    out.append(record("round sphere: Omega = Einstein tensor", np.max(np.abs(Om - so3.milnor_einstein([lam] * 3))), 1e-14))
    out.append(record("[S,B] drift along RK4, dt=0.01", su2_commutator_drift(0.01), 1e-8))
    return out


# ---------------------------------------------------------------------------

RADIAL_GRID = RadialGrid1(0.25, 4.25, 257)


def radial_flat_errors(t: float, radii=(0.5, 1.0, 2.0), alpha: float = 1.0, beta: float = 1.0):
    """Largest RHS error against the closed form and largest fifth-equation residual at the nodes."""
    st = so3.radial_flat(RADIAL_GRID, alpha, beta, t)
    df, dg, dk, dl, res = so3.radial_rhs(st)
    idx = [RADIAL_GRID.index_of(r) for r in radii]
    ex_ = so3.radial_flat_rates(RADIAL_GRID.r[idx], t, alpha, beta)
    err = max(float(np.max(np.abs(v[idx] - ex_[k]))) for k, v in zip("fgkl", (df, dg, dk, dl)))
    return err, float(np.max(np.abs(res[idx])))


def suite_radial_flat() -> list[Record]:
    out = []
    for t in (0.0, 1.0):
        err, res = radial_flat_errors(t)
        out.append(record(f"flat radial RHS vs closed form, t={t:g}", err, 1e-10))
        out.append(record(f"fifth equation residual, t={t:g}", res, 1e-10))
    st = so3.radial_flat(RADIAL_GRID, 1.0, 1.0, 0.5)
    via = so3.radial_rhs_via_so3(st)
    direct = so3.radial_rhs(st)
    inner = slice(1, -1)
    out.append(record("general SO(3) RHS on radial data", max(float(np.max(np.abs(a[inner] - b[inner])))
                                                              for a, b in zip(via[:4], direct[:4])), 1e-10))
    return out


def levi_civita_residuals(n: int, kind: str, seed: int = 0) -> dict:
    grid = PeriodicGrid3(n)
    x, y, z = grid.coords()
    if kind == "conformal":
        u = 0.2 * np.sin(x) * np.cos(y) + 0.1 * np.sin(z)
        du = np.stack([0.2 * np.cos(x) * np.cos(y), -0.2 * np.sin(x) * np.sin(y), 0.1 * np.cos(z)], -1)
        e = so3.conformal_coframe(grid, u)
    else:
        u = np.stack([0.2 * np.sin(y + z), 0.15 * np.cos(x) + 0.1 * np.sin(z), 0.1 * np.sin(x + y)], -1)
        e = so3.diagonal_coframe(grid, u)
    a = so3.levi_civita(e, grid)
    st = so3.SO3State(grid, e, a, np.broadcast_to(np.eye(3), grid.shape + (3, 3)).copy())
    T, Om = so3.torsion_curvature(so3.grid_frame_data(st))
    out = {"T": float(np.max(np.abs(T))), "asym": float(np.max(np.abs(Om - np.swapaxes(Om, -1, -2))))}
    if kind == "conformal":
        out["exact"] = float(np.max(np.abs(a - so3.conformal_connection_exact(grid, u, du))))
    return out


def suite_levi_civita(n: int = 32) -> list[Record]:
    h2 = (2 * np.pi / n) ** 2
    out = []
    for kind in ("conformal", "berger"):
        r = levi_civita_residuals(n, kind)
        out.append(record(f"{kind}: torsion of levi_civita(e), n={n}", r["T"], h2))
        out.append(record(f"{kind}: Omega - Omega^T, n={n}", r["asym"], h2))
        if "exact" in r:
            out.append(record(f"{kind}: a vs closed form, n={n}", r["exact"], h2))
    return out


def suite_monge_ampere(n: int = 16) -> list[Record]:
    from .monge_ampere import ma_state, verify_ma
    st = ma_state(PeriodicGrid3(n))
    tor = tf.torsion_coeffs_torus(st)
    _, res, mean = verify_ma(st)
    out = [record(f"torsion group {k}", v, 1e-10) for k, v in tor.items()]
    out.append(record("det Hess rho - mean", res, 1e-10))
    out.append(record("det Hess rho = 6", abs(mean - 6.0), 1e-10))
    return out


SUITES = {
    "su3g2-standard": suite_su3g2_standard,
    "normal-form": suite_normal_form,
    "roundtrip": suite_roundtrip,
    "commutator": suite_commutator,
    "red1": suite_red1,
    "radial-flat": suite_radial_flat,
    "levi-civita": suite_levi_civita,
    "monge-ampere": suite_monge_ampere,
}
