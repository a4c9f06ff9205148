"""Pointwise exterior algebra over a real vector space of dimension <= 7.

A form stores one coefficient per subset of the basis covectors, indexed by
bitmask (bit ``k`` <-> covector ``k``), with covectors taken in increasing
index order.  The coefficient array may carry leading batch axes, so the same
code evaluates a single form or a whole grid of forms at once.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

MAX_DIM = 7


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def mask_of(indices: Iterable[int]) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


def indices_of(mask: int) -> tuple[int, ...]:
    return tuple(k for k in range(mask.bit_length()) if mask >> k & 1)


def _merge_sign(a: int, b: int) -> int:
    """Sign of e^A ^ e^B relative to e^(A|B) for disjoint masks."""
    inversions = 0
    for j in indices_of(b):
        inversions += popcount(a >> (j + 1))
    return -1 if inversions & 1 else 1


def permutation_sign(seq: Sequence[int]) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
            elif seq[i] == seq[j]:
                return 0
    return sign


@lru_cache(maxsize=None)
def _wedge_table(dim: int):
    a_idx, b_idx, c_idx, sgn = [], [], [], []
    for c in range(1 << dim):
        # enumerate all splittings of c into (a, b)
        sub = c
        while True:
            a = sub
            b = c ^ a
            a_idx.append(a)
            b_idx.append(b)
            c_idx.append(c)
            sgn.append(_merge_sign(a, b))
            if sub == 0:
                break
            sub = (sub - 1) & c
    return (np.array(a_idx), np.array(b_idx), np.array(c_idx), np.array(sgn, dtype=float))


@lru_cache(maxsize=None)
def _contract_table(dim: int):
    src, slot, dst, sgn = [], [], [], []
    for j in range(1 << dim):
        for k in range(dim):
            if j >> k & 1:
                continue
            i = j | 1 << k
            src.append(i)
            slot.append(k)
            dst.append(j)
            sgn.append(-1.0 if popcount(i & ((1 << k) - 1)) & 1 else 1.0)
    order = np.argsort(dst, kind="stable")
    return tuple(np.asarray(x)[order] for x in (src, slot, dst, sgn))


@lru_cache(maxsize=None)
def _hodge_table(dim: int):
    full = (1 << dim) - 1
    comp = np.array([full ^ m for m in range(1 << dim)])
    sgn = np.array([_merge_sign(m, full ^ m) for m in range(1 << dim)], dtype=float)
    return comp, sgn


@lru_cache(maxsize=None)
def _grade_masks(dim: int):
    return np.array([popcount(m) for m in range(1 << dim)])


def _segment_sum(products: np.ndarray, keys: np.ndarray, size: int) -> np.ndarray:
    """Sum ``products`` along the last axis into ``size`` bins given sorted keys.

    Uses ``np.add.reduceat`` so the summation order is fixed.
    """
    out = np.zeros(products.shape[:-1] + (size,))
    if keys.size == 0:
        return out
    starts = np.flatnonzero(np.r_[True, keys[1:] != keys[:-1]])
    out[..., keys[starts]] = np.add.reduceat(products, starts, axis=-1)
    return out


@dataclass(frozen=True, eq=False)
class MultiVectorForm:
    """A (possibly batched) exterior form on ``R^dim``.

    ``coeffs`` has shape ``batch + (2**dim,)``.
    """

    dim: int
    coeffs: np.ndarray

    def __post_init__(self):
        if not 1 <= self.dim <= MAX_DIM:
            raise ValueError(f"dimension {self.dim} outside 1..{MAX_DIM}")
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape[-1:] != (1 << self.dim,):
            raise ValueError(f"coefficient array must end in {1 << self.dim}, got {c.shape}")
        object.__setattr__(self, "coeffs", c)

    # construction helpers
    @classmethod
    def zero(cls, dim: int, batch: tuple = ()) -> "MultiVectorForm":
        return cls(dim, np.zeros(batch + (1 << dim,)))

    @classmethod
    def scalar(cls, dim: int, value) -> "MultiVectorForm":
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (1 << dim,))
        c[..., 0] = value
        return cls(dim, c)

    @classmethod
    def basis(cls, dim: int, *indices: int) -> "MultiVectorForm":
        """The monomial e^{i1} ^ ... ^ e^{ip} with indices in the given order."""
        c = np.zeros(1 << dim)
        if len(set(indices)) == len(indices):
            order = sorted(indices)
            c[mask_of(indices)] = permutation_sign([order.index(i) for i in indices])
        return cls(dim, c)

    @classmethod
    def one_form(cls, dim: int, vec) -> "MultiVectorForm":
        vec = np.asarray(vec, dtype=float)
        c = np.zeros(vec.shape[:-1] + (1 << dim,))
        for k in range(dim):
            c[..., 1 << k] = vec[..., k]
        return cls(dim, c)

    @classmethod
    def from_terms(cls, dim: int, terms: Mapping[tuple, float]) -> "MultiVectorForm":
        out = cls.zero(dim)
        for idx, val in terms.items():
            out = out + val * cls.basis(dim, *idx)
        return out

    @property
    def batch_shape(self) -> tuple:
        return self.coeffs.shape[:-1]

    def __getitem__(self, indices) -> np.ndarray:
        """Coefficient of the monomial with the given index tuple (signed)."""
        if isinstance(indices, int):
            indices = (indices,)
        order = sorted(indices)
        if len(set(order)) != len(order):
            return np.zeros(self.batch_shape)
        sign = permutation_sign([order.index(i) for i in indices])
        return sign * self.coeffs[..., mask_of(indices)]

    def grade(self, p: int) -> "MultiVectorForm":
        keep = _grade_masks(self.dim) == p
        return MultiVectorForm(self.dim, np.where(keep, self.coeffs, 0.0))

    def grades(self) -> set[int]:
        g = _grade_masks(self.dim)
        active = np.any(self.coeffs.reshape(-1, self.coeffs.shape[-1]) != 0, axis=0)
        return set(int(x) for x in g[active])

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def _check(self, other: "MultiVectorForm"):
        if not isinstance(other, MultiVectorForm):
            raise TypeError("expected a MultiVectorForm")
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other):
        self._check(other)
        return MultiVectorForm(self.dim, self.coeffs + other.coeffs)

    def __radd__(self, other):
        if isinstance(other, (int, float)) and other == 0:
            return self
        return NotImplemented

    def __sub__(self, other):
        self._check(other)
        return MultiVectorForm(self.dim, self.coeffs - other.coeffs)

    def __neg__(self):
        return MultiVectorForm(self.dim, -self.coeffs)

    def __mul__(self, scalar):
        scalar = np.asarray(scalar, dtype=float)
        return MultiVectorForm(self.dim, self.coeffs * scalar[..., None])

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / np.asarray(scalar, dtype=float))

    def __xor__(self, other):
        # note: binds looser than + and -, parenthesise accordingly
        return wedge(self, other)

    def __repr__(self):
        nz = [(indices_of(m), c) for m, c in enumerate(np.ravel(self.coeffs)) if c != 0] \
            if not self.batch_shape else "batched"
        return f"MultiVectorForm(dim={self.dim}, {nz})"


@dataclass(frozen=True)
class BasisVector:
    """Basis vector dual to covector ``index``."""

    dim: int
    index: int

    def __post_init__(self):
        if not 0 <= self.index < self.dim:
            raise ValueError(f"index {self.index} out of range for dim {self.dim}")

    def as_array(self) -> np.ndarray:
        v = np.zeros(self.dim)
        v[self.index] = 1.0
        return v


Vector = Union[BasisVector, np.ndarray, Sequence[float]]


def wedge(u: MultiVectorForm, v: MultiVectorForm) -> MultiVectorForm:
    u._check(v)
    dim = u.dim
    a, b, c, s = _wedge_table(dim)
    # drop pairs whose factors vanish identically over the batch
    flat_u = u.coeffs.reshape(-1, 1 << dim)
    flat_v = v.coeffs.reshape(-1, 1 << dim)
    live_u = np.any(flat_u != 0, axis=0)
    live_v = np.any(flat_v != 0, axis=0)
    sel = live_u[a] & live_v[b]
    a, b, c, s = a[sel], b[sel], c[sel], s[sel]
    prod = u.coeffs[..., a] * v.coeffs[..., b] * s
    return MultiVectorForm(dim, _segment_sum(prod, c, 1 << dim))


def wedge_all(forms: Sequence[MultiVectorForm]) -> MultiVectorForm:
    out = forms[0]
    for f in forms[1:]:
        out = wedge(out, f)
    return out


def contract(X: Vector, u: MultiVectorForm) -> MultiVectorForm:
    """Interior product iota(X)u; X may be a BasisVector or a (batched) vector."""
    dim = u.dim
    if isinstance(X, BasisVector):
        if X.dim != dim:
            raise ValueError(f"dimension mismatch: {X.dim} vs {dim}")
        vec = X.as_array()
    else:
        vec = np.asarray(X, dtype=float)
        if vec.shape[-1] != dim:
            raise ValueError(f"dimension mismatch: {vec.shape[-1]} vs {dim}")
    src, slot, dst, sgn = _contract_table(dim)
    prod = u.coeffs[..., src] * vec[..., slot] * sgn
    return MultiVectorForm(dim, _segment_sum(prod, dst, 1 << dim))


def evaluate(u: MultiVectorForm, *vectors: Vector) -> np.ndarray:
    """u(V1, ..., Vp) for a p-form u (higher grades are contracted away)."""
    out = u
    for v in vectors:
        out = contract(v, out)
    return out.coeffs[..., 0]


def volume_form(dim: int, orientation: int = 1) -> MultiVectorForm:
    c = np.zeros(1 << dim)
    c[-1] = orientation
    return MultiVectorForm(dim, c)


def hodge_star(u: MultiVectorForm, orientation: int = 1) -> MultiVectorForm:
    """Hodge star for the basis declared orthonormal.

    ``orientation`` is the sign of the oriented volume form relative to
    e^0 ^ e^1 ^ ... ^ e^(dim-1).
    """
    if orientation not in (1, -1):
        raise ValueError("orientation must be +1 or -1")
    comp, sgn = _hodge_table(u.dim)
    out = np.empty_like(u.coeffs)
    out[..., comp] = orientation * sgn * u.coeffs
    return MultiVectorForm(u.dim, out)


def orientation_sign(order: Sequence[int]) -> int:
    """Orientation parameter for a volume form e^{order[0]} ^ ... ^ e^{order[-1]}."""
    return permutation_sign(order)


def embed(u: MultiVectorForm, slots: Sequence[int], dim: int) -> MultiVectorForm:
    """Re-express ``u`` in a larger basis, sending covector k to covector slots[k]."""
    if len(slots) != u.dim or len(set(slots)) != u.dim:
        raise ValueError("slots must be distinct, one per covector")
    out = np.zeros(u.batch_shape + (1 << dim,))
    for m in range(1 << u.dim):
        idx = indices_of(m)
        target = [slots[k] for k in idx]
        order = sorted(target)
        sign = permutation_sign([order.index(t) for t in target])
        out[..., mask_of(target)] += sign * u.coeffs[..., m]
    return MultiVectorForm(dim, out)


def change_basis(u: MultiVectorForm, L: np.ndarray) -> MultiVectorForm:
    """Substitute each old basis covector e^k by sum_j L[..., k, j] f^j.

    Returns the coefficients of ``u`` in the new covector basis f.
    """
    dim = u.dim
    L = np.asarray(L, dtype=float)
    batch = np.broadcast_shapes(u.batch_shape, L.shape[:-2])
    rows = [MultiVectorForm.one_form(dim, L[..., k, :]) for k in range(dim)]
    result = np.zeros(batch + (1 << dim,))
    result = result + u.coeffs[..., 0:1] * np.eye(1, 1 << dim)[0]
    images = {0: MultiVectorForm.scalar(dim, np.ones(batch))}
    for p in range(1, dim + 1):
        nxt = {}
        for m in range(1 << dim):
            if popcount(m) != p:
                continue
            top = m.bit_length() - 1
            img = wedge(images[m ^ (1 << top)], rows[top])
            nxt[m] = img
            result = result + u.coeffs[..., m : m + 1] * img.coeffs
        images = nxt
    return MultiVectorForm(dim, result)


def hat(c: Sequence[MultiVectorForm]) -> list[MultiVectorForm]:
    """hat(c)^i = 1/2 eps_{ijk} c^j ^ c^k for a triple of 1-forms."""
    return [wedge(c[(i + 1) % 3], c[(i + 2) % 3]) for i in range(3)]


def triple_wedge(c: Sequence[MultiVectorForm]) -> MultiVectorForm:
    return wedge(wedge(c[0], c[1]), c[2])


# ---------------------------------------------------------------------------
# the standard model on R^7 with coordinates (x0, x1, y1, x2, y2, x3, y3)

def standard_r7() -> dict[str, MultiVectorForm]:
    """omega0, psi0, psi0#, phi0 and *phi0 written out monomial by monomial.

    ``phi0`` and ``star_phi0`` are typed in from their expanded expressions,
    not assembled from omega0 and psi0, so comparing the two routes is a real
    check of the wedge, sign and star conventions.
    """
    x = [MultiVectorForm.basis(7, 0)] + [MultiVectorForm.basis(7, 2 * k - 1) for k in (1, 2, 3)]
    y = [None] + [MultiVectorForm.basis(7, 2 * k) for k in (1, 2, 3)]
    X, Y = x[1:], y[1:]
    xh, yh = hat(X), hat(Y)
    omega0 = sum((X[k] ^ Y[k] for k in range(3)), MultiVectorForm.zero(7))
    psi0 = -triple_wedge(Y) + sum((Y[k] ^ xh[k] for k in range(3)), MultiVectorForm.zero(7))
    psi0_sharp = triple_wedge(X) - sum((X[k] ^ yh[k] for k in range(3)), MultiVectorForm.zero(7))
    w = wedge_all
    x0, (x1, x2, x3), (y1, y2, y3) = x[0], X, Y
    phi0 = (-w([y1, y2, y3]) + (y1 ^ (w([x0, x1]) + w([x2, x3])))
            + (y2 ^ (w([x0, x2]) + w([x3, x1]))) + (y3 ^ (w([x0, x3]) + w([x1, x2]))))
    star_phi0 = (w([x0, x1, x2, x3]) - (w([y2, y3]) ^ (w([x0, x1]) + w([x2, x3])))
                 - (w([y3, y1]) ^ (w([x0, x2]) + w([x3, x1])))
                 - (w([y1, y2]) ^ (w([x0, x3]) + w([x1, x2]))))
    return {"x": x, "y": y, "omega0": omega0, "psi0": psi0, "psi0_sharp": psi0_sharp,
            "phi0": phi0, "star_phi0": star_phi0}
