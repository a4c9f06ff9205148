"""Scenario files: ``[section]`` headers with flat ``key = value`` lines.

A :class:`Scenario` knows how to build its initial state, right-hand side and
diagnostics, so the CLI only wires files and exit codes together.
"""
from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

SYSTEMS = ("torus", "so3", "su2", "radial")
RECIPES = {
    "torus": ("flat", "double_curl", "ma_potential", "snapshot"),
    "so3": ("flat", "conformal", "berger", "snapshot"),
    "su2": ("su2", "snapshot"),
    "radial": ("radial_flat", "radial_perturbed", "snapshot"),
}
# section each key is written under by --print-config
SECTIONS = {
    "scenario": ("system", "seed"),
    "grid": ("n", "L", "order", "r_min", "r_max", "m"),
    "initial": ("recipe", "amplitude", "c", "a_amplitude", "modes", "q", "lambda0", "s0",
                "a_diag", "s_diag", "alpha", "beta", "epsilon", "path"),
    "time": ("dt", "t_final", "sample_every"),
    "flow": ("lapse", "project"),
    "guards": ("guard", "constraint_tol", "force"),
    "output": ("output", "snapshot_every"),
}


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    system: str = "torus"
    seed: int = 0
    n: int = 16
    L: float = 2 * math.pi
    order: int = 2
    r_min: float = 0.25
    r_max: float = 4.0
    m: int = 257
    recipe: str = "flat"
    amplitude: float = 0.1
    c: float = 0.0            # 0 picks a shift that keeps S positive definite
    a_amplitude: float = 0.0
    modes: int = 3
    q: str = "1 2 3"
    lambda0: float = 1.0
    s0: float = 1.0
    a_diag: str = ""
    s_diag: str = ""
    alpha: float = 1.0
    beta: float = 1.0
    epsilon: float = 0.0
    path: str = ""
    dt: float = 1e-2
    t_final: float = 1.0
    sample_every: int = 1
    lapse: str = "canonical"
    project: bool = False
    guard: float = 1e-8
    constraint_tol: float = 1e-6
    force: bool = False
    output: str = "run"
    snapshot_every: int = 0

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise ScenarioError(f"system must be one of {', '.join(SYSTEMS)}, got {self.system!r}")
        if self.recipe not in RECIPES[self.system]:
            raise ScenarioError(f"recipe {self.recipe!r} is not available for system {self.system!r}")
        if self.dt <= 0 or self.t_final < 0 or self.sample_every < 1:
            raise ScenarioError("need dt > 0, t_final >= 0 and sample_every >= 1")
        if self.lapse != "canonical":
            raise ScenarioError("only the canonical lapse is available from scenario files")
        if self.recipe == "snapshot" and not self.path:
            raise ScenarioError("recipe = snapshot needs a path")

    def to_text(self) -> str:
        cp = _parser()
        for section, keys in SECTIONS.items():
            cp[section] = {k: _fmt(getattr(self, k)) for k in keys}
        lines = []
        for section in cp.sections():
            lines.append(f"[{section}]")
            lines.extend(f"{k} = {v}" for k, v in cp[section].items())
            lines.append("")
        return "\n".join(lines)

    def replace(self, **kw) -> "Scenario":
        return dataclasses.replace(self, **kw)


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str          # keys are case sensitive (L is the period)
    return cp


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


_TYPES = {f.name: f.type for f in fields(Scenario)}
_BOOL = {"true": True, "yes": True, "1": True, "on": True,
         "false": False, "no": False, "0": False, "off": False}


def _convert(key: str, raw: str):
    kind = _TYPES[key]
    if kind == "bool":
        if raw.lower() not in _BOOL:
            raise ValueError(f"expected true/false, got {raw!r}")
        return _BOOL[raw.lower()]
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def _line_of(text: str, key: str) -> int:
    for i, line in enumerate(text.splitlines(), 1):
        if line.split("=", 1)[0].strip() == key:
            return i
    return 0


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    """Parse scenario text; errors carry ``source:line`` positions."""
    cp = _parser()
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ScenarioError(str(exc)) from None
    values = {}
    for section in cp.sections():
        for key, raw in cp[section].items():
            line = _line_of(text, key)
            if key not in _TYPES:
                raise ScenarioError(f"{source}:{line}: unknown key {key!r}")
            try:
                values[key] = _convert(key, raw)
            except ValueError as exc:
                raise ScenarioError(f"{source}:{line}: bad value for {key!r}: {exc}") from None
    try:
        return Scenario(**values)
    except ScenarioError as exc:
        raise ScenarioError(f"{source}: {exc}") from None


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror}") from None
    return parse_scenario(text, str(path))


def _floats(text: str, count: int = 3) -> np.ndarray:
    vals = np.array([float(v) for v in text.replace(",", " ").split()])
    if vals.shape != (count,):
        raise ScenarioError(f"expected {count} numbers, got {text!r}")
    return vals


# ---------------------------------------------------------------------------
# state construction

def build(sc: Scenario):
    """(initial state, rhs, diagnose, csv columns) for a scenario."""
    from . import integrate, so3_flow, torus_flow
    from .grids import PeriodicGrid3, RadialGrid1

    rng = np.random.default_rng(sc.seed)
    if sc.recipe == "snapshot":
        from .snapshot_io import state_from_snapshot
        st = state_from_snapshot(sc.path, sc.system)
    elif sc.system == "torus":
        grid = PeriodicGrid3(sc.n, sc.L, sc.order)
        if sc.recipe == "flat":
            st = torus_flow.TorusState.flat(grid)
        elif sc.recipe == "double_curl":
            st = torus_flow.double_curl_state(grid, sc.seed, sc.amplitude, sc.c or None,
                                              sc.a_amplitude, sc.modes)
        else:
            from .monge_ampere import ma_state
            st = ma_state(grid, np.diag(_floats(sc.q)), sc.amplitude, sc.seed)
    elif sc.system == "so3":
        grid = PeriodicGrid3(sc.n, sc.L, sc.order)
        S = np.broadcast_to(np.eye(3) * (sc.c or 1.0), grid.shape + (3, 3)).copy()
        if sc.recipe == "flat":
            e = np.broadcast_to(np.eye(3), grid.shape + (3, 3)).copy()
        elif sc.recipe == "conformal":
            e = so3_flow.conformal_coframe(grid, so3_flow.trig_field(grid, rng, sc.amplitude))
        else:
            u = np.stack([so3_flow.trig_field(grid, rng, sc.amplitude) for _ in range(3)], axis=-1)
            e = so3_flow.diagonal_coframe(grid, u)
        st = so3_flow.SO3State.with_levi_civita(grid, e, S)
    elif sc.system == "su2":
        A = np.diag(_floats(sc.a_diag)) if sc.a_diag else sc.lambda0 * np.eye(3)
        S = np.diag(_floats(sc.s_diag)) if sc.s_diag else sc.s0 * np.eye(3)
        st = so3_flow.Su2State(A, S)
    else:
        grid = RadialGrid1(sc.r_min, sc.r_max, sc.m)
        st = so3_flow.radial_flat(grid, sc.alpha, sc.beta)
        if sc.recipe == "radial_perturbed":
            r = grid.r
            centre = rng.uniform(grid.r_min + 0.3 * (grid.r_max - grid.r_min),
                                 grid.r_max - 0.3 * (grid.r_max - grid.r_min))
            bump = sc.epsilon * np.exp(-((r - centre) / 0.5) ** 2)
            # scaling f and g keeps k = l, so the fifth equation still holds
            st = dataclasses.replace(st, f=st.f * (1 + bump), g=st.g * (1 + bump))

    if sc.system == "torus":
        rhs = torus_flow.rhs_fn()
        columns = torus_flow.CSV_COLUMNS
        diagnose = lambda s: torus_flow.diagnostics(s).row()  # noqa: E731
    elif sc.system == "so3":
        rhs = so3_flow.rhs_so3
        columns = so3_flow.SO3_CSV_COLUMNS
        diagnose = so3_flow.diagnostics_so3
    elif sc.system == "su2":
        rhs = so3_flow.su2_reduced_rhs
        columns = so3_flow.SO3_CSV_COLUMNS
        diagnose = so3_flow.su2_diagnostics
    else:
        rhs = so3_flow.radial_rhs_fn
        columns = so3_flow.RADIAL_CSV_COLUMNS
        flat = (sc.alpha, sc.beta) if sc.recipe == "radial_flat" else None
        diagnose = lambda s: so3_flow.radial_diagnostics(s, flat)  # noqa: E731
    post = integrate.project_divergence if (sc.project and sc.system == "torus") else None
    return st, rhs, diagnose, columns, post
