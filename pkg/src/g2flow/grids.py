"""Finite-difference domains: a periodic 3-torus lattice and a 1D radial lattice.

Fields on the torus are numpy arrays whose first three axes index the lattice
sites (axis k <-> coordinate x^(k+1)); any trailing axes are components.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exterior import popcount
from .linalg3 import EPS


@dataclass(frozen=True)
class PeriodicGrid3:
    n: int = 32
    L: float = 2 * np.pi
    order: int = 2

    def __post_init__(self):
        if self.n < 8:
            raise ValueError(f"periodic grid needs n >= 8, got {self.n}")
        if self.L <= 0:
            raise ValueError("period length must be positive")
        if self.order not in (2, 4):
            raise ValueError("finite-difference order must be 2 or 4")

    @property
    def h(self) -> float:
        return self.L / self.n

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    def coords(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = np.arange(self.n) * self.h
        return tuple(np.meshgrid(x, x, x, indexing="ij"))

    def wavenumber(self, mode: int = 1) -> float:
        return 2 * np.pi * mode / self.L


def _check_axis(axis: int) -> int:
    if axis not in (1, 2, 3):
        raise ValueError(f"axis must be 1, 2 or 3, got {axis}")
    return axis - 1


def partial(fld: np.ndarray, axis: int, grid: PeriodicGrid3, order: int | None = None) -> np.ndarray:
    """Central difference along coordinate ``axis`` (1..3) with periodic wrap."""
    ax = _check_axis(axis)
    order = grid.order if order is None else order
    h = grid.h
    if order == 2:
        return (np.roll(fld, -1, ax) - np.roll(fld, 1, ax)) / (2 * h)
    if order == 4:
        return (
            -np.roll(fld, -2, ax) + 8 * np.roll(fld, -1, ax) - 8 * np.roll(fld, 1, ax) + np.roll(fld, 2, ax)
        ) / (12 * h)
    raise ValueError("order must be 2 or 4")


def gradient(fld: np.ndarray, grid: PeriodicGrid3, order: int | None = None) -> np.ndarray:
    """All three coordinate partials stacked on a new last axis."""
    return np.stack([partial(fld, k, grid, order) for k in (1, 2, 3)], axis=-1)


def div_rows(S: np.ndarray, grid: PeriodicGrid3, order: int | None = None) -> np.ndarray:
    """(div S)_i = sum_a dS_{ia}/dx^a."""
    return sum(partial(S[..., :, a], a + 1, grid, order) for a in range(3))


def shift(fld: np.ndarray, steps=(1, 0, 0)) -> np.ndarray:
    return np.roll(fld, steps, axis=(0, 1, 2))


def ext_d(form: np.ndarray, grid: PeriodicGrid3, dim: int = 3, base_slots=(0, 1, 2),
          order: int | None = None) -> np.ndarray:
    """Exterior derivative of a form field whose coefficients depend on the base.

    ``form`` has shape ``grid.shape + (2**dim,)`` in the bitmask layout of
    :mod:`g2flow.exterior`; ``base_slots[k]`` is the covector slot of dx^(k+1).
    All other slots are treated as closed constant covectors.
    """
    size = 1 << dim
    if form.shape[-1] != size:
        raise ValueError(f"expected {size} coefficients, got {form.shape[-1]}")
    if dim == 3 and base_slots == (0, 1, 2):
        live = np.any(form.reshape(-1, size) != 0, axis=0)
        if live.any() and all(popcount(m) == 3 for m in np.flatnonzero(live)):
            warnings.warn("ext_d of a top-degree form is identically zero", stacklevel=2)
    out = np.zeros_like(form)
    for k, slot in enumerate(base_slots):
        bit = 1 << slot
        deriv = partial(form, k + 1, grid, order)
        for m in range(size):
            if m & bit:
                continue
            # dx^slot ^ e^m: move dx^slot past the covectors below it
            sign = -1.0 if popcount(m & (bit - 1)) & 1 else 1.0
            out[..., m | bit] += sign * deriv[..., m]
    return out


def double_curl_field(grid: PeriodicGrid3, Phi_modes, c: float) -> np.ndarray:
    """Analytic S_ij = eps_{iab} eps_{jcd} d^2 Phi_bd / dx^a dx^c + c delta_ij.

    ``Phi_modes`` is a list of ``(amp_matrix(3x3 symmetric), kvec(3 ints), phase)``
    and Phi = sum amp * cos(k.x + phase).  The result is symmetric and
    divergence-free in the continuum.
    """
    X = np.stack(grid.coords(), axis=-1)
    S = np.zeros(grid.shape + (3, 3))
    for amp, kvec, phase in Phi_modes:
        k = grid.wavenumber(1) * np.asarray(kvec, dtype=float)
        arg = X @ k + phase
        # d^2/dx^a dx^c cos(arg) = -k_a k_c cos(arg)
        kk = -np.einsum("a,c->ac", k, k)
        term = np.einsum("iab,jcd,ac,bd->ij", EPS, EPS, kk, amp)
        S += np.cos(arg)[..., None, None] * term
    return S + c * np.eye(3)


@dataclass(frozen=True)
class RadialGrid1:
    r_min: float = 0.25
    r_max: float = 4.0
    m: int = 257

    def __post_init__(self):
        if self.r_min <= 0:
            raise ValueError("radial grid must exclude the origin (r_min > 0)")
        if self.r_max <= self.r_min:
            raise ValueError("r_max must exceed r_min")
        if self.m < 5:
            raise ValueError(f"radial grid needs m >= 5, got {self.m}")

    @property
    def dr(self) -> float:
        return (self.r_max - self.r_min) / (self.m - 1)

    @property
    def r(self) -> np.ndarray:
        return self.r_min + self.dr * np.arange(self.m)

    def index_of(self, r: float) -> int:
        i = int(round((r - self.r_min) / self.dr))
        if not 0 <= i < self.m or abs(self.r[i] - r) > 1e-12 * max(1.0, abs(r)):
            raise ValueError(f"r = {r} is not a grid node")
        return i


def radial_partial(f: np.ndarray, grid: RadialGrid1, derivative: int = 1) -> np.ndarray:
    """Second-order first or second r-derivative along axis 0.

    Central differences in the interior, one-sided second-order stencils at the
    two ends.
    """
    f = np.asarray(f, dtype=float)
    if f.shape[0] != grid.m:
        raise ValueError("field length does not match the radial grid")
    h = grid.dr
    out = np.empty_like(f)
    if derivative == 1:
        out[1:-1] = (f[2:] - f[:-2]) / (2 * h)
        out[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h)
        out[-1] = (3 * f[-1] - 4 * f[-2] + f[-3]) / (2 * h)
    elif derivative == 2:
        out[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / h**2
        out[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / h**2
        out[-1] = (2 * f[-1] - 5 * f[-2] + 4 * f[-3] - f[-4]) / h**2
    else:
        raise ValueError("derivative must be 1 or 2")
    return out


def interior(grid: RadialGrid1, width: int = 1) -> slice:
    return slice(width, grid.m - width)
