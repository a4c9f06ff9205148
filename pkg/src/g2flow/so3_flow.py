"""The SO(3)-fibred flow: covariant calculus, Levi-Civita solve, constraints and RHS.

Everything is expressed in the coframe e: the connection is stored as
a^i = a_ij e^j, derivatives of matrix fields are frame derivatives F_{,k}, and
the exterior derivative of the frame is summarised by

    de^i = tau_ij e-hat^j,        da^i = da_ij e-hat^j.

A :class:`FrameData` bundles these pointwise jets.  Three providers build one:
finite differences on the periodic lattice, the left-invariant SU(2) algebra,
and exact coordinate jets for the spherically symmetric reduction.  The flow
kernel only sees the jets, so the same code evaluates all three.

Conventions: [Y_i, Y_j] = eps_ijk Y_k, d_H e = de + [a ^ e] = T_ij e-hat^j Y_i,
d_H a = da + 1/2 [a ^ a] = Omega_ij e-hat^j Y_i.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grids import PeriodicGrid3, RadialGrid1, partial, radial_partial
from .linalg3 import EPS, adjugate, axial, cofactor, det3, require_posdef, trace
from .torus_flow import GuardViolation, commutator_residual, sqrt_det

I3 = np.eye(3)
SO3_CSV_COLUMNS = ("t", "c_torsion", "c_divS", "commSB", "detS_min",
                   "tor_domega", "tor_dpsi", "tor_dpsisharp", "tor_domsq")
RADIAL_CSV_COLUMNS = ("t", "res_eq5", "err_vs_flat")


# ---------------------------------------------------------------------------
# pointwise kernel

@dataclass(frozen=True, eq=False)
class FrameData:
    tau: np.ndarray
    a: np.ndarray
    da: np.ndarray
    S: np.ndarray
    grad: Callable[[np.ndarray], np.ndarray]


def two_form_to_hat(F: np.ndarray, Einv: np.ndarray) -> np.ndarray:
    """Coefficients c_ij of 1/2 F^i_ml dx^m ^ dx^l = c_ij e-hat^j, with dx = Einv e."""
    G = np.swapaxes(Einv, -1, -2)[..., None, :, :] @ F @ Einv[..., None, :, :]
    return 0.5 * axial(G)


def levi_civita_from_tau(tau: np.ndarray) -> np.ndarray:
    """The unique a with T = 0: a = tau^T - tr(tau)/2 I."""
    return np.swapaxes(tau, -1, -2) - 0.5 * trace(tau)[..., None, None] * I3


def torsion_curvature(fd: FrameData) -> tuple[np.ndarray, np.ndarray]:
    """T = tau + tr(a) I - a^T and Omega = da + cof(a)."""
    T = fd.tau + trace(fd.a)[..., None, None] * I3 - np.swapaxes(fd.a, -1, -2)
    Om = fd.da + cofactor(fd.a)
    return T, Om


def covariant_d_sym(A: np.ndarray, fd: FrameData) -> np.ndarray:
    """A_{ij;k} = A_{ij,k} - (eps_{al i be} A_{be j} + eps_{al j be} A_{be i}) a_{al k}."""
    bracket = np.einsum("aib,...bj->...aij", EPS, A)
    bracket = bracket + np.swapaxes(bracket, -1, -2)
    lead = bracket.shape[:-3]
    corr = np.swapaxes(bracket.reshape(lead + (3, 9)), -1, -2) @ fd.a
    return fd.grad(A) - corr.reshape(lead + (3, 3, 3))


def covariant_div(A: np.ndarray, fd: FrameData) -> np.ndarray:
    return np.einsum("...iaa->...i", covariant_d_sym(A, fd))


def _lapse_factor(S: np.ndarray, lapse) -> np.ndarray | float:
    rd = sqrt_det(S)
    if lapse is None or (isinstance(lapse, str) and lapse == "canonical"):
        return 1.0
    f = np.asarray(lapse, dtype=float)
    if np.any(f <= 0):
        raise ValueError("lapse must be positive")
    return f / rd


def frame_rhs(fd: FrameData, lapse=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(p, dS/dt, da/dt) where de^i/dt = p_ij e^j.

    p = f mu St, dS/dt = -f mu (tr(St) S - 2 det S I + Omega), and
    da^i/dt = -eps_{i al be} p_{j al; be} e^j, rewritten for the coframe
    coefficients as da_ij/dt = -eps_{i al be} p_{j al; be} - (a p)_ij.
    """
    S = fd.S
    fm = _lapse_factor(S, lapse)
    fm_m = np.asarray(fm)[..., None, None] if not np.isscalar(fm) else fm
    St = adjugate(S)
    p = fm_m * St
    _, Om = torsion_curvature(fd)
    dS = -fm_m * (trace(St)[..., None, None] * S - 2 * det3(S)[..., None, None] * I3 + Om)
    dp = covariant_d_sym(p, fd)
    da = -np.swapaxes(axial(dp), -1, -2) - fd.a @ p
    return p, dS, da


def torsion_groups_so3(fd: FrameData) -> dict[str, np.ndarray]:
    """Coefficient fields of d omega, d(1/2 omega^2), d psi and d psi# for SO(3).

    Semicolon derivatives throughout; the row divergence in d(1/2 omega^2) is
    the covariant one, matching the half-flat condition S_{ik;k} = 0.
    """
    S = fd.S
    rd = sqrt_det(S)
    mu = 1.0 / rd
    muSt = mu[..., None, None] * adjugate(S)
    T, Om = torsion_curvature(fd)
    d_muSt = covariant_d_sym(muSt, fd)
    g = {}
    g["domega.a_ehat"] = (axial(d_muSt)
                          - np.einsum("...ia,...aj->...ij", muSt, T))
    g["domega.e123"] = np.einsum("...ij,...ij->...", muSt, Om)
    g["domega.ahat_e"] = muSt
    g["domsq.ahat_e123"] = -(covariant_div(S, fd) + np.einsum("abc,...ia,...bc->...i", EPS, S, T))
    g["dpsi.ahat_ehat"] = T
    g["dpsi.a_e123"] = -np.einsum("iab,...ab->...i", EPS, Om)
    g["dpsisharp.a123_e"] = -fd.grad(mu)
    g["dpsisharp.ahat_ehat"] = mu[..., None, None] * Om - rd[..., None, None] * I3
    g["dpsisharp.a_e123"] = fd.grad(rd) + rd[..., None] * np.einsum("iab,...ab->...i", EPS, T)
    return g


def torsion_coeffs_so3(fd: FrameData, f=None) -> dict[str, float]:
    names = {"domega": "tor_domega", "domsq": "tor_domsq", "dpsi": "tor_dpsi", "dpsisharp": "tor_dpsisharp"}
    out = {v: 0.0 for v in names.values()}
    for key, arr in torsion_groups_so3(fd).items():
        n = names[key.split(".")[0]]
        out[n] = max(out[n], float(np.max(np.abs(arr))))
    if f is not None:
        fm = np.asarray(f, dtype=float) / sqrt_det(fd.S)
        out["lapse"] = float(np.max(np.abs(fd.grad(fm))))
    return out


def constraints_from_frame(fd: FrameData) -> tuple[float, float]:
    T, _ = torsion_curvature(fd)
    return float(np.max(np.abs(T))), float(np.max(np.abs(covariant_div(fd.S, fd))))


def covariant_commutator(fd: FrameData, transpose: bool = False) -> np.ndarray:
    """CS - SC - mu SDS (or with C^T) using semicolon derivatives."""
    return commutator_residual(fd.S, lambda F: covariant_d_sym(F, fd), transpose=transpose)


# ---------------------------------------------------------------------------
# coordinate jets -> frame data

def coframe_jets(E: np.ndarray, dE: np.ndarray, d2E: np.ndarray):
    """tau, Levi-Civita a and da from a coordinate coframe and its first two derivatives.

    ``E[..., i, l]`` gives e^i = E_il dx^l; ``dE[..., i, l, n] = d_n E_il`` and
    ``d2E[..., i, l, n, m] = d_m d_n E_il``.
    """
    Einv = np.linalg.inv(E)
    F = np.swapaxes(dE, -1, -2) - dE                     # F[i, m, l] = d_m E_il - d_l E_im
    tau = two_form_to_hat(F, Einv)
    dEinv = -np.einsum("...ab,...bcn,...cd->...adn", Einv, dE, Einv)
    dF = np.einsum("...ilmn->...imln", d2E) - d2E           # dF[i, m, l, n] = d_n F[i, m, l]
    dG = (np.einsum("...imln,...mp,...lq->...ipqn", dF, Einv, Einv)
          + np.einsum("...iml,...mpn,...lq->...ipqn", F, dEinv, Einv)
          + np.einsum("...iml,...mp,...lqn->...ipqn", F, Einv, dEinv))
    dtau = 0.5 * np.einsum("jpq,...ipqn->...ijn", EPS, dG)
    a = levi_civita_from_tau(tau)
    da_e = np.swapaxes(dtau, -2, -3) - 0.5 * np.einsum("...kkn->...n", dtau)[..., None, None, :] * I3[..., None]
    dA = np.einsum("...imn,...ml->...iln", da_e, E) + np.einsum("...im,...mln->...iln", a, dE)
    H = np.swapaxes(dA, -1, -2) - dA                      # H[i, n, l] = d_n A_il - d_l A_in
    return tau, a, two_form_to_hat(H, Einv)


# ---------------------------------------------------------------------------
# periodic lattice provider

@dataclass(frozen=True, eq=False)
class SO3State:
    grid: PeriodicGrid3
    e: np.ndarray
    a: np.ndarray
    S: np.ndarray
    t: float = 0.0

    EVOLVING = ("e", "a", "S")
    SYMMETRIC = ("S",)

    def __post_init__(self):
        shape = self.grid.shape + (3, 3)
        for name in ("e", "a", "S"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
            object.__setattr__(self, name, arr)
        if np.any(np.abs(det3(self.e)) < 1e-14):
            raise ValueError("coframe is degenerate at some site")

    @classmethod
    def with_levi_civita(cls, grid: PeriodicGrid3, e: np.ndarray, S: np.ndarray, t: float = 0.0) -> "SO3State":
        return cls(grid, e, levi_civita(e, grid), S, t)


def _coord_grad(F: np.ndarray, grid: PeriodicGrid3) -> np.ndarray:
    return np.stack([partial(F, k, grid) for k in (1, 2, 3)], axis=-1)


def grid_frame_data(st: SO3State) -> FrameData:
    """Jets by central differences: tau from de, da from the coordinate connection a E."""
    Einv = np.linalg.inv(st.e)
    dE = _coord_grad(st.e, st.grid)
    tau = two_form_to_hat(np.swapaxes(dE, -1, -2) - dE, Einv)
    dA = _coord_grad(st.a @ st.e, st.grid)
    da = two_form_to_hat(np.swapaxes(dA, -1, -2) - dA, Einv)

    def grad(F):
        g = _coord_grad(F, st.grid)
        return (g.reshape(st.grid.shape + (-1, 3)) @ Einv).reshape(g.shape)
    return FrameData(tau, st.a, da, st.S, grad)


def levi_civita(e: np.ndarray, grid: PeriodicGrid3) -> np.ndarray:
    """Connection coefficients (coframe components) with d_H e = 0."""
    if np.any(np.abs(det3(e)) < 1e-14):
        raise ValueError("singular coframe")
    dE = _coord_grad(e, grid)
    tau = two_form_to_hat(np.swapaxes(dE, -1, -2) - dE, np.linalg.inv(e))
    return levi_civita_from_tau(tau)


def constraints_so3(st: SO3State) -> tuple[float, float]:
    return constraints_from_frame(grid_frame_data(st))


def rhs_so3(st: SO3State, lapse=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(de/dt, da/dt, dS/dt) on the lattice, in the order of ``SO3State.EVOLVING``."""
    p, dS, da = frame_rhs(grid_frame_data(st), lapse)
    return p @ st.e, da, dS


def diagnostics_so3(st: SO3State) -> dict:
    fd = grid_frame_data(st)
    c_t, c_d = constraints_from_frame(fd)
    tor = torsion_coeffs_so3(fd)
    comm = float(np.max(np.abs(covariant_commutator(fd, transpose=True))))
    row = {"t": st.t, "c_torsion": c_t, "c_divS": c_d, "commSB": comm,
           "detS_min": float(det3(st.S).min())}
    row.update(tor)
    return {k: row[k] for k in SO3_CSV_COLUMNS}


def conformal_coframe(grid: PeriodicGrid3, u: np.ndarray) -> np.ndarray:
    return np.exp(u)[..., None, None] * I3


def conformal_connection_exact(grid: PeriodicGrid3, u: np.ndarray, du: np.ndarray) -> np.ndarray:
    """Closed-form Levi-Civita coefficients for e = exp(u) dx: a_ij = -exp(-u) eps_ijk d_k u."""
    return -np.exp(-u)[..., None, None] * np.einsum("ijk,...k->...ij", EPS, du)


def diagonal_coframe(grid: PeriodicGrid3, u: np.ndarray) -> np.ndarray:
    """Berger-type coframe diag(exp(u_1), exp(u_2), exp(u_3)) dx with u[..., 3]."""
    return np.exp(u)[..., None, :] * I3


def trig_field(grid: PeriodicGrid3, rng: np.random.Generator, amplitude: float, count: int = 2) -> np.ndarray:
    X = np.stack(grid.coords(), axis=-1)
    out = np.zeros(grid.shape)
    for _ in range(count):
        k = rng.integers(-1, 2, size=3)
        if not k.any():
            k[0] = 1
        out += amplitude * rng.normal() * np.cos(X @ (grid.wavenumber(1) * k) + rng.uniform(0, 2 * np.pi))
    return out


# ---------------------------------------------------------------------------
# left-invariant SU(2) data

@dataclass(frozen=True, eq=False)
class Su2State:
    """e = A theta with d theta^i = -theta-hat^i; S constant on the group."""
    A: np.ndarray
    S: np.ndarray
    t: float = 0.0

    EVOLVING = ("A", "S")
    SYMMETRIC = ("S",)

    def __post_init__(self):
        object.__setattr__(self, "A", np.asarray(self.A, dtype=float))
        object.__setattr__(self, "S", np.asarray(self.S, dtype=float))
        require_posdef(self.S)
        if np.any(np.abs(det3(self.A)) < 1e-14):
            raise ValueError("A must be invertible")

    @property
    def C(self) -> np.ndarray:
        return su2_structure(self.A)

    @property
    def B(self) -> np.ndarray:
        C = self.C
        return C - 0.5 * trace(C)[..., None, None] * I3


def su2_structure(A: np.ndarray, literal: bool = False) -> np.ndarray:
    """C with de^i = C_ij e-hat^j for e = A theta: C = -A A^T / det A.

    ``literal=True`` returns -det(A) A A^T instead, the variant that does not
    follow from d theta^i = -theta-hat^i (kept for comparison only).
    """
    AAt = A @ np.swapaxes(A, -1, -2)
    d = det3(A)[..., None, None]
    return -d * AAt if literal else -AAt / d


def su2_frame_data(st: Su2State) -> FrameData:
    C = st.C
    B = C - 0.5 * trace(C)[..., None, None] * I3
    # a^i = B_ij e^j with constant B, so da^i = B_ij de^j = (B C)_ik e-hat^k
    return FrameData(C, B, B @ C, st.S, lambda F: np.zeros(F.shape + (3,)))


def su2_reduced_rhs(st: Su2State) -> tuple[np.ndarray, np.ndarray]:
    """dA/dt = St A and dS/dt = -tr(St) S + 2 det S I - C^2 - adj(C) + (tr C)^2/4 I."""
    S, C = st.S, st.C
    require_posdef(S)
    St = adjugate(S)
    trC = trace(C)[..., None, None]
    dA = St @ st.A
    dS = (-trace(St)[..., None, None] * S + 2 * det3(S)[..., None, None] * I3
          - C @ C - adjugate(C) + 0.25 * trC**2 * I3)
    return dA, dS


def su2_rhs_via_so3(st: Su2State, lapse=None) -> tuple[np.ndarray, np.ndarray]:
    p, dS, _ = frame_rhs(su2_frame_data(st), lapse)
    return p @ st.A, dS


def su2_commutator(st: Su2State) -> np.ndarray:
    """[S, B], which vanishes exactly when S_{ij;j} = 0."""
    B = st.B
    return st.S @ B - B @ st.S


def milnor_einstein(p) -> np.ndarray:
    """Orthonormal Einstein tensor of the left-invariant metric with coframe diag(p) theta.

    Milnor's formulas: with [E2, E3] = l1 E1 (cyclic), l_i = p_i / (p_j p_k),
    m_i = (l1 + l2 + l3)/2 - l_i, Ric_ii = 2 m_j m_k.
    """
    p = np.asarray(p, dtype=float)
    lam = np.array([p[0] / (p[1] * p[2]), p[1] / (p[2] * p[0]), p[2] / (p[0] * p[1])])
    m = 0.5 * lam.sum() - lam
    ric = 2 * np.array([m[1] * m[2], m[2] * m[0], m[0] * m[1]])
    return np.diag(ric - 0.5 * ric.sum())


# ---------------------------------------------------------------------------
# spherically symmetric reduction

@dataclass(frozen=True, eq=False)
class RadialState:
    """e = (f dr, g d rho, g sin(rho) d xi), S = diag(k, l, l) on a radial lattice."""
    grid: RadialGrid1
    f: np.ndarray
    g: np.ndarray
    k: np.ndarray
    l: np.ndarray
    t: float = 0.0

    EVOLVING = ("f", "g", "k", "l")
    SYMMETRIC = ()

    def __post_init__(self):
        for name in ("f", "g", "k", "l"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (self.grid.m,):
                raise ValueError(f"{name} must have length {self.grid.m}")
            object.__setattr__(self, name, arr)

    def min_positive(self) -> float:
        return float(min(self.f.min(), self.g.min(), self.k.min(), self.l.min()))


def _require_positive(st: RadialState):
    if st.min_positive() <= 0:
        raise GuardViolation("radial fields must stay positive")


def radial_rhs(st: RadialState):
    """(df/dt, dg/dt, dk/dt, dl/dt, fifth-equation residual)."""
    _require_positive(st)
    f, g, k, l = st.f, st.g, st.k, st.l
    fr = radial_partial(f, st.grid)
    gr = radial_partial(g, st.grid)
    grr = radial_partial(g, st.grid, 2)
    kr = radial_partial(k, st.grid)
    df = f * l**2
    dg = g * k * l
    dk = k * l**2 - 2 * k**2 * l - (gr / (f * g))**2 + 1 / g**2
    dl = -l**3 - grr / (f**2 * g) + fr * gr / (f**3 * g)
    res = kr - 2 / g * gr * (l - k)
    return df, dg, dk, dl, res


def radial_rhs_fn(st: RadialState):
    return radial_rhs(st)[:4]


def radial_constraint(st: RadialState) -> np.ndarray:
    return radial_rhs(st)[4]


def radial_flat(grid: RadialGrid1, alpha: float = 1.0, beta: float = 1.0, t: float = 0.0) -> RadialState:
    s = np.sqrt(2 * t + beta)
    r = grid.r
    one = np.ones_like(r)
    return RadialState(grid, alpha * s * one, alpha * s * r, one / s, one / s, t)


def radial_flat_rates(r, t: float, alpha: float = 1.0, beta: float = 1.0) -> dict:
    """Exact time derivatives of the flat solution."""
    r = np.asarray(r, dtype=float)
    s = np.sqrt(2 * t + beta)
    return {"f": alpha / s + 0 * r, "g": alpha * r / s, "k": -(s**-3) + 0 * r, "l": -(s**-3) + 0 * r}


def radial_frame_data(st: RadialState, rho: float = 1.0) -> FrameData:
    """Exact jets of the radial coframe at polar angle ``rho`` (r-derivatives by differences)."""
    f, g, k, l = st.f, st.g, st.k, st.l
    grid = st.grid
    fr, gr = radial_partial(f, grid), radial_partial(g, grid)
    frr, grr = radial_partial(f, grid, 2), radial_partial(g, grid, 2)
    sn, cs = np.sin(rho), np.cos(rho)
    m = grid.m
    E = np.zeros((m, 3, 3))
    E[:, 0, 0], E[:, 1, 1], E[:, 2, 2] = f, g, g * sn
    dE = np.zeros((m, 3, 3, 3))
    dE[:, 0, 0, 0], dE[:, 1, 1, 0], dE[:, 2, 2, 0] = fr, gr, gr * sn
    dE[:, 2, 2, 1] = g * cs
    d2E = np.zeros((m, 3, 3, 3, 3))
    d2E[:, 0, 0, 0, 0], d2E[:, 1, 1, 0, 0], d2E[:, 2, 2, 0, 0] = frr, grr, grr * sn
    d2E[:, 2, 2, 0, 1] = d2E[:, 2, 2, 1, 0] = gr * cs
    d2E[:, 2, 2, 1, 1] = -g * sn
    tau, a, da = coframe_jets(E, dE, d2E)
    S = np.zeros((m, 3, 3))
    S[:, 0, 0], S[:, 1, 1], S[:, 2, 2] = k, l, l

    def grad(F):
        # fields of r only: F_{,1} = F_r / f, the other frame derivatives vanish
        out = np.zeros(F.shape + (3,))
        out[..., 0] = radial_partial(F, grid) / f.reshape((m,) + (1,) * (F.ndim - 1))
        return out
    return FrameData(tau, a, da, S, grad)


def radial_rhs_via_so3(st: RadialState, rho: float = 1.0):
    """General SO(3) RHS on the radial data: (df/dt, dg/dt, dk/dt, dl/dt, da/dt)."""
    fd = radial_frame_data(st, rho)
    p, dS, da = frame_rhs(fd)
    return p[:, 0, 0] * st.f, p[:, 1, 1] * st.g, dS[:, 0, 0], dS[:, 1, 1], da, dS, p


def radial_diagnostics(st: RadialState, flat=None, width: int = 1) -> dict:
    inner = slice(width, st.grid.m - width)
    res = float(np.max(np.abs(radial_constraint(st)[inner])))
    row = {"t": st.t, "res_eq5": res, "err_vs_flat": float("nan")}
    if flat is not None:
        ref = radial_flat(st.grid, *flat, t=st.t)
        row["err_vs_flat"] = float(max(np.max(np.abs(getattr(st, n) - getattr(ref, n))) for n in "fgkl"))
    return row


def su2_diagnostics(st: Su2State) -> dict:
    fd = su2_frame_data(st)
    c_t, c_d = constraints_from_frame(fd)
    row = {"t": st.t, "c_torsion": c_t, "c_divS": c_d,
           "commSB": float(np.max(np.abs(su2_commutator(st)))), "detS_min": float(det3(st.S))}
    row.update(torsion_coeffs_so3(fd))
    return {k: row[k] for k in SO3_CSV_COLUMNS}
