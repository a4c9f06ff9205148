"""Recover a potential rho with Hess rho = h on a box, and check det Hess rho = const.

The box is indexed without periodic wrap, so it is contractible and the two
path integrations (first the rows h_ij dx^j, then the resulting 1-form) are
well defined.  Integration uses cumulative trapezoid sweeps from the corner.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .grids import PeriodicGrid3
from .linalg3 import EPS, adjugate, det3
from .snapshot import write_snapshot
from .torus_flow import TorusState, torsion_coeffs_torus

CURL_TOL = 1e-6
SWEEP_ORDERS = ((0, 1, 2), (2, 1, 0))


class NotIntegrable(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PotentialField:
    rho: np.ndarray
    spacing: float
    origin: tuple = (0.0, 0.0, 0.0)
    gauge: str = "rho = 0 and grad rho = 0 at the origin corner"

    def hessian(self) -> np.ndarray:
        return box_hessian(self.rho, self.spacing)

    def save(self, path, t: float = 0.0):
        m = self.rho.shape
        header = {"kind": "scalar3", "shape": "x".join(map(str, m)), "L": self.spacing * (m[0] - 1),
                  "components": "1", "time": t}
        if m[0] == m[1] == m[2]:
            header["n"] = m[0]
        return write_snapshot(path, self.rho, header)


def box_gradient(f: np.ndarray, spacing: float) -> np.ndarray:
    """Second-order gradient on a box (one-sided at the faces), stacked on a new last axis."""
    g = np.gradient(f, spacing, axis=(0, 1, 2), edge_order=2)
    return np.stack(g, axis=-1)


def box_hessian(rho: np.ndarray, spacing: float) -> np.ndarray:
    H = box_gradient(box_gradient(rho, spacing), spacing)
    return 0.5 * (H + np.swapaxes(H, -1, -2))


def curl_residual(h: np.ndarray, spacing: float) -> float:
    """max |eps_{i al be} d h_{j al} / dx^be|."""
    dh = box_gradient(h, spacing)          # [..., j, al, be]
    return float(np.max(np.abs(np.einsum("iab,...jab->...ij", EPS, dh))))


def _sweep(g: np.ndarray, spacing: float, order) -> np.ndarray:
    """Integrate a gradient field g (..., 3) along the axis order given, from the corner."""
    perm = tuple(order)
    G = np.transpose(g, perm + (3,))[..., list(perm)]
    f1 = cumulative_trapezoid(G[:, 0, 0, 0], dx=spacing, initial=0.0)
    f2 = cumulative_trapezoid(G[:, :, 0, 1], dx=spacing, axis=1, initial=0.0)
    f3 = cumulative_trapezoid(G[:, :, :, 2], dx=spacing, axis=2, initial=0.0)
    F = f1[:, None, None] + f2[:, :, None] + f3
    return np.transpose(F, np.argsort(perm))


def integrate_gradient(g: np.ndarray, spacing: float, orders=SWEEP_ORDERS) -> np.ndarray:
    """Scalar f with grad f ~ g and f = 0 at the corner, averaged over sweep orders."""
    return sum(_sweep(g, spacing, o) for o in orders) / len(orders)


def path_discrepancy(g: np.ndarray, spacing: float) -> float:
    """Largest difference between the six single-order sweeps (discrete Poincare consistency)."""
    sweeps = [_sweep(g, spacing, o) for o in permutations(range(3))]
    return float(max(np.max(np.abs(s - sweeps[0])) for s in sweeps[1:]))


def potential_from_hessian(h: np.ndarray, spacing: float, tol: float = CURL_TOL,
                           periodic: bool = False, origin=(0.0, 0.0, 0.0)) -> PotentialField:
    """Two-stage Poincare integration of a symmetric curl-free matrix field.

    The curl is measured with second-order differences, so smooth integrable
    data shows an O(spacing^2) residual; the acceptance threshold is
    ``(tol + spacing**2) * max|h|``.
    """
    if periodic:
        raise NotIntegrable("a periodic box is not contractible; pass a sub-box without wrap")
    h = np.asarray(h, dtype=float)
    if h.ndim != 5 or h.shape[-2:] != (3, 3) or min(h.shape[:3]) < 3:
        raise ValueError("h must have shape (m1, m2, m3, 3, 3) with every m >= 3")
    if np.max(np.abs(h - np.swapaxes(h, -1, -2))) > 1e-12 * max(1.0, float(np.max(np.abs(h)))):
        raise NotIntegrable("h is not symmetric")
    scale = max(float(np.max(np.abs(h))), 1e-300)
    curl = curl_residual(h, spacing)
    if curl > (tol + spacing**2) * scale:
        raise NotIntegrable(f"curl residual {curl:.3e} exceeds {(tol + spacing**2) * scale:.3e}")
    # stage 1: phi_i with d phi_i = h_ij dx^j; stage 2: rho with d rho = phi_i dx^i
    phi = np.stack([integrate_gradient(h[..., i, :], spacing) for i in range(3)], axis=-1)
    rho = integrate_gradient(phi, spacing)
    return PotentialField(rho, spacing, tuple(origin))


def verify_ma(st: TorusState, box=None, torsion_tol: float = 1e-6):
    """Rebuild rho from St = adj(S) on a box and measure max |det Hess rho - mean|.

    Returns ``(PotentialField, residual, mean_det)``.
    """
    if not np.array_equal(st.e, np.eye(3)):
        raise ValueError("verify_ma expects the coordinate coframe e = dx")
    tor = torsion_coeffs_torus(st)
    worst = max(tor.values())
    if worst > torsion_tol:
        raise ValueError(f"state is not torsion-free to {torsion_tol:g} (largest group {worst:.3e})")
    box = box if box is not None else (slice(None),) * 3
    St = adjugate(st.S)[box]
    pf = potential_from_hessian(St, st.grid.h)
    d = det3(pf.hessian())
    mean = float(np.mean(d))
    return pf, float(np.max(np.abs(d - mean))), mean


def ma_state(grid: PeriodicGrid3, Q=None, amplitude: float = 0.0, seed: int = 0) -> TorusState:
    """State with St = Q + Hess(periodic perturbation) and a = 0.

    For ``amplitude = 0`` this is the quadratic potential rho = x^T Q x / 2,
    which is torsion-free.  The perturbation keeps St a Hessian but makes
    det St non-constant.
    """
    Q = np.diag([1.0, 2.0, 3.0]) if Q is None else np.asarray(Q, dtype=float)
    St = np.broadcast_to(Q, grid.shape + (3, 3)).copy()
    if amplitude:
        rng = np.random.default_rng(seed)
        X = np.stack(grid.coords(), axis=-1)
        for _ in range(3):
            k = grid.wavenumber(1) * rng.integers(-1, 2, size=3).astype(float)
            ph = rng.uniform(0, 2 * np.pi)
            # Hess of amplitude * cos(k.x + ph)
            St += -amplitude * np.cos(X @ k + ph)[..., None, None] * np.outer(k, k)
    dSt = det3(St)
    if np.any(dSt <= 0):
        raise ValueError("St is not positive definite; lower the amplitude")
    S = adjugate(St) / np.sqrt(dSt)[..., None, None]
    return TorusState(grid, np.zeros(grid.shape + (3, 3)), S)
