"""Batched 3x3 matrix kernel.

Every function accepts arrays of shape ``(..., 3, 3)`` so the same call works on
one matrix or on a whole field of them.
"""
from __future__ import annotations

import numpy as np

# eps[i, j, k] = Levi-Civita symbol
EPS = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    EPS[_i, _j, _k] = 1.0
    EPS[_j, _i, _k] = -1.0

POSDEF_RTOL = 1e-12


class NotPositiveDefinite(ValueError):
    pass


def det3(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    return (
        M[..., 0, 0] * (M[..., 1, 1] * M[..., 2, 2] - M[..., 1, 2] * M[..., 2, 1])
        - M[..., 0, 1] * (M[..., 1, 0] * M[..., 2, 2] - M[..., 1, 2] * M[..., 2, 0])
        + M[..., 0, 2] * (M[..., 1, 0] * M[..., 2, 1] - M[..., 1, 1] * M[..., 2, 0])
    )


def adjugate(M: np.ndarray) -> np.ndarray:
    """Adjugate (transposed cofactor matrix): adjugate(M) @ M = det3(M) I."""
    M = np.asarray(M, dtype=float)
    out = np.empty(M.shape)
    for i in range(3):
        i1, i2 = (i + 1) % 3, (i + 2) % 3
        for j in range(3):
            j1, j2 = (j + 1) % 3, (j + 2) % 3
            # cofactor C_ji lands at out[i, j]
            out[..., i, j] = M[..., j1, i1] * M[..., j2, i2] - M[..., j1, i2] * M[..., j2, i1]
    return out


def cofactor(M: np.ndarray) -> np.ndarray:
    return np.swapaxes(adjugate(M), -1, -2)


def eps_contract2(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """N_ij = eps_{i a b} eps_{j c d} P_{a c} Q_{b d}."""
    return np.einsum("iab,jcd,...ac,...bd->...ij", EPS, EPS, P, Q)


def sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + np.swapaxes(M, -1, -2))


def trace(M: np.ndarray) -> np.ndarray:
    return np.trace(M, axis1=-2, axis2=-1)


def leading_minors(S: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    S = np.asarray(S, dtype=float)
    m1 = S[..., 0, 0]
    m2 = S[..., 0, 0] * S[..., 1, 1] - S[..., 0, 1] * S[..., 1, 0]
    return m1, m2, det3(S)


def is_posdef(S: np.ndarray, rtol: float = POSDEF_RTOL) -> np.ndarray:
    """Sitewise test that all leading principal minors exceed rtol * scale."""
    S = np.asarray(S, dtype=float)
    scale = np.max(np.abs(S), axis=(-2, -1))
    m1, m2, m3 = leading_minors(S)
    return (m1 > rtol * scale) & (m2 > rtol * scale**2) & (m3 > rtol * scale**3)


def require_posdef(S: np.ndarray, what: str = "S") -> None:
    ok = is_posdef(S)
    if not np.all(ok):
        bad = int(np.size(ok) - np.count_nonzero(ok))
        raise NotPositiveDefinite(f"{what} is not positive definite at {bad} site(s)")


def chol_factor(S: np.ndarray) -> np.ndarray:
    """Lower-triangular Q with positive diagonal and Q @ Q.T = S."""
    S = np.asarray(S, dtype=float)
    if not np.allclose(S, np.swapaxes(S, -1, -2), rtol=0, atol=1e-14 * max(1.0, float(np.max(np.abs(S))))):
        raise ValueError("chol_factor expects a symmetric matrix")
    require_posdef(S)
    return np.linalg.cholesky(S)


def sym_from_upper(u: np.ndarray) -> np.ndarray:
    """Build a symmetric matrix from its 6 upper-triangle entries (00,01,02,11,12,22)."""
    u = np.asarray(u, dtype=float)
    S = np.empty(u.shape[:-1] + (3, 3))
    for n, (i, j) in enumerate(((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))):
        S[..., i, j] = u[..., n]
        S[..., j, i] = u[..., n]
    return S


def upper_of_sym(S: np.ndarray) -> np.ndarray:
    return np.stack([S[..., i, j] for i, j in ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))], axis=-1)


def axial(M: np.ndarray) -> np.ndarray:
    """v_i = eps_{i a b} M_{a b}, contracting the last two axes."""
    return np.stack([M[..., 1, 2] - M[..., 2, 1], M[..., 2, 0] - M[..., 0, 2],
                     M[..., 0, 1] - M[..., 1, 0]], axis=-1)


def random_spd(rng: np.random.Generator, size=(), shift: float = 0.5) -> np.ndarray:
    """Random SPD matrices R R^T + shift I."""
    R = rng.normal(size=tuple(np.atleast_1d(size)) + (3, 3)) if size != () else rng.normal(size=(3, 3))
    return R @ np.swapaxes(R, -1, -2) + shift * np.eye(3)
