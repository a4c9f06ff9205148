"""Flow states to and from snapshot files."""
from __future__ import annotations

import numpy as np

from .grids import PeriodicGrid3, RadialGrid1
from .snapshot import read_snapshot, write_snapshot

KINDS = {"torus": "torus3", "so3": "so3field3", "su2": "su2", "radial": "radial1"}


def state_to_snapshot(path, st, system: str, step: int = 0, seed: int | None = None):
    header = {"kind": KINDS[system], "time": repr(float(st.t)), "step": step}
    if seed is not None:
        header["seed"] = seed
    if system in ("torus", "so3"):
        g = st.grid
        header.update(n=g.n, L=repr(g.L), order=g.order)
        if system == "torus":
            header["e"] = " ".join(repr(float(v)) for v in st.e.ravel())
            data = np.stack([st.a, st.S], axis=3)
        else:
            data = np.stack([st.e, st.a, st.S], axis=3)
    elif system == "su2":
        header["shape"] = "1"
        data = np.stack([st.A, st.S])[None]
    else:
        g = st.grid
        header.update(m=g.m, r_min=repr(g.r_min), r_max=repr(g.r_max))
        data = np.stack([st.f, st.g, st.k, st.l], axis=1)
    return write_snapshot(path, data, header)


def state_from_snapshot(path, system: str | None = None):
    from .so3_flow import RadialState, SO3State, Su2State
    from .torus_flow import TorusState

    header, data = read_snapshot(path)
    kind = header.get("kind", "")
    by_kind = {v: k for k, v in KINDS.items()}
    if kind not in by_kind:
        raise ValueError(f"{path}: snapshot kind {kind!r} does not hold a flow state")
    found = by_kind[kind]
    if system is not None and system != found:
        raise ValueError(f"{path}: snapshot holds a {found} state, scenario wants {system}")
    t = float(header.get("time", 0.0))
    if found in ("torus", "so3"):
        grid = PeriodicGrid3(int(header["n"]), float(header["L"]), int(header.get("order", 2)))
        if found == "torus":
            e = np.array([float(v) for v in header["e"].split()]).reshape(3, 3)
            return TorusState(grid, data[..., 0, :, :], data[..., 1, :, :], e, t)
        return SO3State(grid, data[..., 0, :, :], data[..., 1, :, :], data[..., 2, :, :], t)
    if found == "su2":
        return Su2State(data[0, 0], data[0, 1], t)
    grid = RadialGrid1(float(header["r_min"]), float(header["r_max"]), int(header["m"]))
    return RadialState(grid, *(data[:, i] for i in range(4)), t=t)
