"""SU(3) and G2 forms attached to a triple (e, a, S) at a point.

Basis bookkeeping: the 6-dim covector basis is ``(v1, v2, v3, b1, b2, b3)``
where ``v`` are the vertical slots (dual to the infinitesimal generators X_i*)
and ``b`` are base slots.  A triple is stored as

    e^i = E_ij b^j,      a^i = v^i + A_ij b^j,      S symmetric positive definite.

The 7-dim basis appends ``dt`` as slot 6.  With E = I, A = 0, S = I the forms
reduce to the standard model under (v, b, dt) <-> (dx, dy, dx^0).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exterior import (
    MultiVectorForm,
    change_basis,
    contract,
    embed,
    hat,
    hodge_star,
    orientation_sign,
    triple_wedge,
    wedge,
)
from .linalg3 import EPS, adjugate, chol_factor, det3, require_posdef

DIM6 = 6
DIM7 = 7
DT_SLOT = 6
VERTICAL = (0, 1, 2)
BASE = (3, 4, 5)
# oriented volume dt v1 b1 v2 b2 v3 b3
G2_ORIENTATION = orientation_sign((6, 0, 3, 1, 4, 2, 5))


class InvalidStructure(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TriplePoint:
    e: np.ndarray
    a: np.ndarray
    S: np.ndarray

    def __post_init__(self):
        for name in ("e", "a", "S"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        require_posdef(self.S)
        if np.any(np.abs(det3(self.e)) < 1e-14):
            raise InvalidStructure("degenerate coframe: e^1 ^ e^2 ^ e^3 vanishes")

    @classmethod
    def standard(cls) -> "TriplePoint":
        return cls(np.eye(3), np.zeros((3, 3)), np.eye(3))

    @property
    def batch_shape(self) -> tuple:
        return self.S.shape[:-2]

    def one_forms(self) -> tuple[list[MultiVectorForm], list[MultiVectorForm]]:
        batch = self.batch_shape
        a_vecs = np.zeros(batch + (3, 6))
        a_vecs[..., :, :3] = np.eye(3)
        a_vecs[..., :, 3:] = self.a
        e_vecs = np.zeros(batch + (3, 6))
        e_vecs[..., :, 3:] = self.e
        a = [MultiVectorForm.one_form(DIM6, a_vecs[..., i, :]) for i in range(3)]
        e = [MultiVectorForm.one_form(DIM6, e_vecs[..., i, :]) for i in range(3)]
        return a, e


@dataclass(frozen=True, eq=False)
class FormSet:
    omega: MultiVectorForm
    psi: MultiVectorForm
    psi_sharp: MultiVectorForm
    half_om_sq: MultiVectorForm

    def residual(self, other: "FormSet") -> float:
        return max((getattr(self, k) - getattr(other, k)).max_abs()
                   for k in ("omega", "psi", "psi_sharp", "half_om_sq"))


def _bcast(x, form: MultiVectorForm) -> np.ndarray:
    return np.broadcast_to(np.asarray(x, dtype=float), form.batch_shape) if form.batch_shape else x


def forms_from_triple(t: TriplePoint) -> FormSet:
    """omega, psi, psi#, and 1/2 omega^omega assembled from a triple."""
    a, e = t.one_forms()
    S = t.S
    detS = det3(S)
    St = adjugate(S)
    mu = detS ** -0.5
    ahat, ehat = hat(a), hat(e)

    omega = MultiVectorForm.zero(DIM6, t.batch_shape)
    for i in range(3):
        for j in range(3):
            omega = omega + wedge(a[i], e[j]) * (mu * St[..., i, j])

    psi = triple_wedge(e) * (-detS)
    for k in range(3):
        psi = psi + wedge(e[k], ahat[k])

    psi_sharp = triple_wedge(a) * mu
    for k in range(3):
        psi_sharp = psi_sharp - wedge(a[k], ehat[k]) * np.sqrt(detS)

    half = MultiVectorForm.zero(DIM6, t.batch_shape)
    for i in range(3):
        for j in range(3):
            half = half - wedge(ahat[i], ehat[j]) * S[..., i, j]
    return FormSet(omega, psi, psi_sharp, half)


def vertical_vectors(dim: int = DIM6) -> list[np.ndarray]:
    """The generators X_i* as vectors (dual to the vertical slots)."""
    return [np.eye(dim)[k] for k in VERTICAL]


def triple_from_forms(omega: MultiVectorForm, psi: MultiVectorForm, sym_tol: float = 1e-10):
    """Recover (E, S) from (omega, psi) in the fixed basis.

    e^k = 1/2 eps_{ijk} iota(X_j*) iota(X_i*) psi; the matrix
    M = (det S)^{-1/2} adj(S) is read off iota(X_i*) omega = M_ij e^j.
    """
    X = vertical_vectors()
    batch = psi.batch_shape
    e_vecs = np.zeros(batch + (3, 6))
    for k in range(3):
        acc = np.zeros(batch + (1 << DIM6,))
        for i in range(3):
            for j in range(3):
                if EPS[i, j, k]:
                    acc = acc + 0.5 * EPS[i, j, k] * contract(X[j], contract(X[i], psi)).coeffs
        for s in range(6):
            e_vecs[..., k, s] = acc[..., 1 << s]
    if np.max(np.abs(e_vecs[..., :, :3])) > 1e-10 * max(1.0, np.max(np.abs(e_vecs))):
        raise InvalidStructure("recovered e has vertical components")
    E = e_vecs[..., :, 3:]
    if np.any(np.abs(det3(E)) < 1e-14):
        raise InvalidStructure("recovered coframe is degenerate")

    W = np.zeros(batch + (3, 3))
    for i in range(3):
        w = contract(X[i], omega).coeffs
        for l, s in enumerate(BASE):
            W[..., i, l] = w[..., 1 << s]
    M = W @ np.linalg.inv(E)
    detM = det3(M)
    if np.any(detM <= 0):
        raise InvalidStructure("det M <= 0: not a valid special Lagrangian structure")
    detS = detM**2
    St = detM[..., None, None] * M
    S = adjugate(St) / detS[..., None, None]
    asym = np.max(np.abs(S - np.swapaxes(S, -1, -2)))
    if asym > sym_tol * max(1.0, float(np.max(np.abs(S)))):
        raise InvalidStructure(f"recovered S is not symmetric (deviation {asym:.3e})")
    S = 0.5 * (S + np.swapaxes(S, -1, -2))
    return E, S


def _embed7(u: MultiVectorForm) -> MultiVectorForm:
    return embed(u, tuple(range(DIM6)), DIM7)


def g2_from_family(F: FormSet, f=1.0) -> tuple[MultiVectorForm, MultiVectorForm]:
    """phi = omega ^ f dt + psi and its dual -f psi# ^ dt + 1/2 omega^omega."""
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise ValueError("lapse must be positive")
    dt = MultiVectorForm.basis(DIM7, DT_SLOT)
    om, ps = _embed7(F.omega), _embed7(F.psi)
    phi = wedge(om, dt) * f + ps
    star_phi = wedge(_embed7(F.psi_sharp), dt) * (-f) + _embed7(F.half_om_sq)
    return phi, star_phi


def metric_coframe(t: TriplePoint, f=1.0) -> np.ndarray:
    """Rows: the orthonormal coframe (Q^-1 a, det Q Q^-1 e, f dt) in the 7-dim basis.

    Q is the Cholesky factor of S (S = Q Q^T).
    """
    Q = chol_factor(t.S)
    Qi = np.linalg.inv(Q)
    dQ = det3(Q)
    batch = t.batch_shape
    a_rows = np.zeros(batch + (3, 7))
    a_rows[..., :, :3] = np.eye(3)
    a_rows[..., :, 3:6] = t.a
    e_rows = np.zeros(batch + (3, 7))
    e_rows[..., :, 3:6] = t.e
    K = np.zeros(batch + (7, 7))
    K[..., 0:3, :] = Qi @ a_rows
    K[..., 3:6, :] = dQ[..., None, None] * (Qi @ e_rows)
    K[..., 6, 6] = f
    return K


def vertical_frame(t: TriplePoint) -> list[np.ndarray]:
    """V_k = sum_j Q_jk X_j*, orthonormal for the induced metric."""
    Q = chol_factor(t.S)
    V = []
    for k in range(3):
        v = np.zeros(t.batch_shape + (7,))
        v[..., :3] = Q[..., :, k]
        V.append(v)
    return V


def hodge_star_in_coframe(u: MultiVectorForm, K: np.ndarray, orientation: int = G2_ORIENTATION) -> MultiVectorForm:
    """Hodge star of the metric whose orthonormal coframe has rows K."""
    Kinv = np.linalg.inv(K)
    in_frame = change_basis(u, Kinv)
    return change_basis(hodge_star(in_frame, orientation), K)


def normal_form_check(phi: MultiVectorForm, V, star_phi: MultiVectorForm | None = None,
                      metric: np.ndarray | None = None, orientation: int = 1,
                      tol: float = 1e-12) -> float:
    """Rebuild phi and *phi from E^i, Z and V^k and return the max coefficient residual.

    ``V`` holds three vectors orthonormal for ``metric`` (identity if omitted)
    with phi(V1, V2, V3) = 0.  Without ``star_phi`` the orthonormal-basis star
    with ``orientation`` is used.
    """
    dim = phi.dim
    V = [np.asarray(v, dtype=float) for v in V]
    g = np.eye(dim) if metric is None else np.asarray(metric, dtype=float)
    gram = np.stack([np.stack([np.einsum("...i,...ij,...j->...", V[i], g, V[j]) for j in range(3)], -1)
                     for i in range(3)], -2)
    if np.max(np.abs(gram - np.eye(3))) > 1e-10:
        raise ValueError("V is not orthonormal for the given metric")
    val = contract(V[2], contract(V[1], contract(V[0], phi))).coeffs[..., 0]
    if np.max(np.abs(val)) > tol:
        raise ValueError(f"phi(V1, V2, V3) = {np.max(np.abs(val)):.3e} is not zero")
    if star_phi is None:
        if metric is not None:
            raise ValueError("star_phi is required for a non-standard metric")
        star_phi = hodge_star(phi, orientation)

    Vlow = [MultiVectorForm.one_form(dim, np.einsum("...ij,...j->...i", g, v)) for v in V]
    E = []
    for i in range(3):
        acc = MultiVectorForm.zero(dim, phi.batch_shape)
        for j in range(3):
            for k in range(3):
                if EPS[i, j, k]:
                    acc = acc + contract(V[k], contract(V[j], phi)) * (0.5 * EPS[i, j, k])
        E.append(acc)
    Z = -contract(V[2], contract(V[1], contract(V[0], star_phi)))
    Vhat, Ehat = hat(Vlow), hat(E)

    phi_rec = -triple_wedge(E)
    for k in range(3):
        phi_rec = phi_rec + wedge(wedge(Vlow[k], E[k]), Z) + wedge(E[k], Vhat[k])
    inner = triple_wedge(Vlow)
    for k in range(3):
        inner = inner - wedge(Vlow[k], Ehat[k])
    star_rec = -wedge(inner, Z)
    for k in range(3):
        star_rec = star_rec - wedge(Vhat[k], Ehat[k])
    return max((phi - phi_rec).max_abs(), (star_phi - star_rec).max_abs())


def standard_forms() -> FormSet:
    return forms_from_triple(TriplePoint.standard())


def random_triple(rng: np.random.Generator, size=None, spread: float = 0.5) -> TriplePoint:
    """Random valid triple(s): E near the identity with det E > 0, arbitrary A, SPD S."""
    shape = () if size is None else tuple(np.atleast_1d(size))
    E = np.eye(3) + spread * rng.normal(size=shape + (3, 3))
    flip = det3(E) < 0
    E[..., 0, :] = np.where(flip[..., None], -E[..., 0, :], E[..., 0, :])
    A = rng.normal(size=shape + (3, 3))
    R = rng.normal(size=shape + (3, 3))
    S = R @ np.swapaxes(R, -1, -2) + 0.5 * np.eye(3)
    return TriplePoint(E, A, S)
