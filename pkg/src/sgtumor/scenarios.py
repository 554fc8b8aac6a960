"""Catalogue of the tumour-growth experiments.

Each scenario is described by a flat table of named constants (radii,
amplitudes, growth parameters) plus numerical defaults.  Any entry can be
overridden, either programmatically or from a scenario file::

    # lines are ``key = value``; '#' starts a comment
    scenario = testIa
    numerics.m = 80
    numerics.dt = 0.001
    numerics.snapshots = 0.25, 0.5, 0.75, 1.0
    params.G0 = 0.5

Bare keys are looked up in ``numerics`` first and then in ``params``.

Piecewise data are cell-averaged over ``numerics.subcells ** 2``
sub-points per cell (``subcells = 1`` samples cell centres).  Averaging
keeps each cell's value continuous in ``z`` while a radius sweeps across
the cell, which the spectral convergence of the Galerkin expansion relies on.

Random functions (growth constants, cutoff radii, exchange rates) take the
node coordinates in the :func:`sgtumor.chaos.node_args` convention.  The
initial-data callables take ``(X, Y, z)`` with a single node ``z`` (a float,
or a ``(z1, z2)`` pair for two random dimensions).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .chaos import Projector, RandomSpace
from .grid import GridSpec
from .kernel import StepParams
from .nutrient import DEFAULT_DELTA_RHO, GrowthClosure, NutrientModel

NAMES = ("testIa", "testIb", "testII", "testIII")
COUPLINGS = ("galerkin", "diagonal")


@dataclass(frozen=True)
class Numerics:
    m: float = 80.0
    dx: float = 0.1
    dt: float = 1e-3
    T: float = 1.0
    order: int = 3
    nz: int = 16
    a: float = -2.2
    b: float = 2.2
    epsilon: Optional[float] = None
    limiter: str = "minmod"
    solver: str = "direct"
    coupling: str = "galerkin"
    delta_rho: float = DEFAULT_DELTA_RHO
    subcells: int = 8
    snapshots: tuple = (0.25, 0.5, 0.75, 1.0)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.dx > 0:
            raise ValueError(f"dx must be positive, got {self.dx}")
        if self.T < 0:
            raise ValueError(f"final time must be >= 0, got {self.T}")
        if self.order < 0:
            raise ValueError(f"gPC order must be >= 0, got {self.order}")
        if self.subcells < 1:
            raise ValueError(f"subcells must be >= 1, got {self.subcells}")
        if self.nz < 1:
            raise ValueError(f"need at least one quadrature node, got {self.nz}")
        if self.coupling not in COUPLINGS:
            raise ValueError(f"unknown coupling {self.coupling!r}; choose from {COUPLINGS}")
        if any(s < 0 for s in self.snapshots):
            raise ValueError("snapshot times must be non-negative")
        # fail early on bad m / epsilon / limiter / solver
        self.step_params()

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))

    def grid(self) -> GridSpec:
        return GridSpec.uniform(self.dx, self.a, self.b)

    def step_params(self) -> StepParams:
        return StepParams(m=self.m, dt=self.dt, epsilon=self.epsilon, limiter=self.limiter,
                          solver=self.solver)

    def snapshot_times(self) -> list[float]:
        return [s for s in self.snapshots if s <= self.T + 0.5 * self.dt]


@dataclass(frozen=True)
class SpeciesRates:
    """Exchange rates of the proliferating / quiescent / dead model."""

    a: Callable
    b: Callable
    d: Callable
    mu: Callable


@dataclass(frozen=True)
class Scenario:
    name: str
    dim: int
    params: dict
    numerics: Numerics
    initial: Callable  # (X, Y, z) -> total density
    closure: GrowthClosure
    species: Optional[SpeciesRates] = None
    species_initial: Optional[Callable] = None  # (X, Y, z) -> (P, Q, D)

    @property
    def space(self) -> RandomSpace:
        return RandomSpace(self.dim)

    def grid(self) -> GridSpec:
        return self.numerics.grid()


# --------------------------------------------------------------------------
# catalogue constants
# --------------------------------------------------------------------------

DEFAULT_PARAMS = {
    "testIa": dict(r1=0.4, r2=0.5, r3=0.6, r4=0.7, spread=0.3, core=0.15, core_z=-0.1,
                   rim=0.35, rim_z=0.1, ramp_div=5.0, G0=0.5, G0_z=-0.1, outside=1.0,
                   c_B=1.0, nutrient="vivo", outer_ramp="rising"),
    "testIb": dict(r1=0.4, r2=0.5, r3=0.6, r4=0.7, spread1=0.2, spread2=0.2, core=0.15,
                   core_z1=-0.1, rim=0.35, rim_z2=0.1, ramp_div=10.0, ramp_base=2.0,
                   G0=0.5, G0_z1=-0.1, G0_z2=-0.1, outside=1.0, c_B=1.0, nutrient="vivo"),
    "testII": dict(r1=0.4, r1_z=0.4, r2=0.5, r2_z=0.5, core=0.2, amp_z=0.5, ramp_div=5.0,
                   G0=0.5, G0_z=-0.1, outside=1.0, c_B=1.0, nutrient="vivo"),
    "testIII": dict(r1=0.4, r1_z=0.5, r2=0.5, r2_z=0.5, r3=0.2, r3_z=0.2, r4=0.3, r4_z=0.4,
                    total=0.3, total_z=0.5, dead=0.15, dead_z=0.1, star=0.8, petals=4.0,
                    P_frac=0.55, Q_frac=0.45, a=0.2, a_z=0.25, b=0.2, b_z=-0.25,
                    d=0.25, d_z=-0.6, mu=0.0, G0=0.5, c_B=1.0, nutrient="vivo",
                    ramp="rising"),
}

DEFAULT_NUMERICS = {
    "testIa": Numerics(),
    "testIb": Numerics(order=4, nz=10),
    "testII": Numerics(),
    "testIII": Numerics(T=0.5, snapshots=(0.1, 0.5)),
}


# --------------------------------------------------------------------------
# scenario builders
# --------------------------------------------------------------------------

def _closure(p, G0, cutoff) -> GrowthClosure:
    return GrowthClosure(NutrientModel(p["nutrient"], p["c_B"]), G0, cutoff,
                         p.get("outside", 1.0))


def _test_ia(p, num):
    s = p["spread"]
    if p["outer_ramp"] not in ("rising", "decreasing"):
        raise ValueError(f"params.outer_ramp must be 'rising' or 'decreasing', got {p['outer_ramp']!r}")

    def radii(z):
        return [p[k] * (1 + s * z) for k in ("r1", "r2", "r3", "r4")]

    def initial(X, Y, z):
        r = np.sqrt(X * X + Y * Y)
        r1, r2, r3, r4 = radii(z)
        core = p["core"] + p["core_z"] * z
        rim = p["rim"] + p["rim_z"] * z
        # rising: climbs from 0 at r3 to the rim value at r4; decreasing: falls to 0 at r4
        outer = (r3 - r) / (r3 - r4) if p["outer_ramp"] == "rising" else (r4 - r) / (r4 - r3)
        return np.select(
            [r <= r1, r <= r2, r <= r3, r <= r4],
            [np.full_like(r, core), (r - r1) / (p["ramp_div"] * (r2 - r1)) + core,
             np.full_like(r, rim), outer * rim],
            0.0,
        )

    closure = _closure(p, lambda z: p["G0"] * (1 + p["G0_z"] * z), lambda z: radii(z)[3])
    return 1, initial, closure


def _test_ib(p, num):
    def radii(z1, z2):
        return (p["r1"] * (1 + p["spread1"] * z1), p["r2"] * (1 + p["spread1"] * z1),
                p["r3"] * (1 + p["spread2"] * z2), p["r4"] * (1 + p["spread2"] * z2))

    def initial(X, Y, z):
        z1, z2 = z
        r = np.sqrt(X * X + Y * Y)
        r1, r2, r3, r4 = radii(z1, z2)
        core = p["core"] + p["core_z1"] * z1
        rim = p["rim"] + p["rim_z2"] * z2
        ramp = (r - r1) / (p["ramp_div"] * (r2 - r1)) * (p["ramp_base"] + z2 + z1) + core
        return np.select(
            [r < r1, r < r2, r < r3, r < r4],
            [np.full_like(r, core), ramp, np.full_like(r, rim), (r4 - r) / (r4 - r3) * rim],
            0.0,
        )

    closure = _closure(
        p,
        lambda z: p["G0"] * (1 + p["G0_z1"] * z[0] + p["G0_z2"] * z[1]),
        lambda z: radii(z[0], z[1])[3],
    )
    return 2, initial, closure


def _test_ii(p, num):
    def radii(z):
        return p["r1"] * (1 + p["r1_z"] * z), p["r2"] * (1 + p["r2_z"] * z)

    def initial(X, Y, z):
        r = np.sqrt(X * X + Y * Y)
        r1, r2 = radii(z)
        amp = 1 + p["amp_z"] * z
        return np.select(
            [r <= r1, r <= r2],
            [np.full_like(r, p["core"] * amp), (r2 - r) / (p["ramp_div"] * (r2 - r1)) * amp],
            0.0,
        )

    closure = _closure(p, lambda z: p["G0"] * (1 + p["G0_z"] * z), lambda z: radii(z)[1])
    return 1, initial, closure


def _test_iii(p, num):
    if p["ramp"] not in ("rising", "decreasing"):
        raise ValueError(f"params.ramp must be 'rising' or 'decreasing', got {p['ramp']!r}")

    def rad(key, z):
        return p[key] * (1 + p[key + "_z"] * z)

    def star_radius(X, Y):
        arg = X * X + Y * Y - p["star"] * np.sin(p["petals"] * np.arctan2(Y, X))
        return np.sqrt(np.maximum(arg, 0.0))

    def plateau_ramp(r, r_in, r_out, level):
        if p["ramp"] == "rising":
            ramp = (r - r_in) / (r_out - r_in) * level + level
        else:
            ramp = (r_out - r) / (r_out - r_in) * level
        return np.select([r <= r_in, r <= r_out], [np.full_like(r, level), ramp], 0.0)

    def parts(X, Y, z):
        r = star_radius(X, Y)
        total = plateau_ramp(r, rad("r1", z), rad("r2", z), p["total"] * (1 + p["total_z"] * z))
        dead = plateau_ramp(r, rad("r3", z), rad("r4", z), p["dead"] + p["dead_z"] * z)
        live = total - dead
        return p["P_frac"] * live, p["Q_frac"] * live, dead

    def initial(X, Y, z):
        P, Q, D = parts(X, Y, z)
        return P + Q + D

    def lin(base, slope):
        return lambda z: base * (1 + slope * z)

    rates = SpeciesRates(lin(p["a"], p["a_z"]), lin(p["b"], p["b_z"]), lin(p["d"], p["d_z"]),
                         lambda z: p["mu"] + 0.0 * np.asarray(z, dtype=float))
    closure = _closure(p, lambda z: p["G0"] + 0.0 * np.asarray(z, dtype=float), None)
    return 1, initial, closure, rates, parts


_BUILDERS = {"testIa": _test_ia, "testIb": _test_ib, "testII": _test_ii, "testIII": _test_iii}


def _coerce(value, current):
    if isinstance(current, tuple):
        if isinstance(value, str):
            value = [v for v in value.replace(";", ",").split(",") if v.strip()]
        return tuple(float(v) for v in np.atleast_1d(value))
    if isinstance(value, str):
        text = value.strip()
        if current is None or isinstance(current, float):
            if text.lower() in ("none", "null", ""):
                return None
            return float(text)
        if isinstance(current, bool):
            return text.lower() in ("1", "true", "yes", "on")
        if isinstance(current, int):
            return int(text)
        return text
    if isinstance(current, float) and isinstance(value, int):
        return float(value)
    return value


def make_scenario(name: str, overrides: Optional[dict] = None, validate: bool = True) -> Scenario:
    """Build a catalogue scenario, applying ``overrides``.

    Override keys are ``numerics.<field>``, ``params.<name>`` or a bare name
    (numerics fields take precedence).  Unknown keys raise ``KeyError``;
    values that break an invariant raise ``ValueError``.
    """
    if name not in _BUILDERS:
        raise KeyError(f"unknown scenario {name!r}; choose from {NAMES}")
    params = dict(DEFAULT_PARAMS[name])
    numerics = DEFAULT_NUMERICS[name]
    num_fields = {f.name for f in fields(Numerics)}
    num_updates = {}
    for key, value in (overrides or {}).items():
        section, _, bare = key.rpartition(".")
        if section not in ("", "numerics", "params"):
            raise KeyError(f"unknown override section in {key!r}")
        if section in ("", "numerics") and bare in num_fields:
            num_updates[bare] = _coerce(value, getattr(numerics, bare))
        elif section in ("", "params") and bare in params:
            params[bare] = _coerce(value, params[bare])
        else:
            raise KeyError(f"unknown scenario parameter {key!r}")
    numerics = replace(numerics, **num_updates)
    built = _BUILDERS[name](params, numerics)
    dim, initial, closure = built[:3]
    closure = replace(closure, delta_rho=numerics.delta_rho, subcells=numerics.subcells)
    species = built[3] if len(built) > 3 else None
    species_initial = built[4] if len(built) > 4 else None
    sc = Scenario(name, dim, params, numerics, initial, closure, species, species_initial)
    if validate:
        check_scenario(sc)
    return sc


def check_scenario(sc: Scenario, n_nodes: Optional[int] = None) -> None:
    """Initial data in [0, 1] and supported at least two cells inside the domain.

    Checked on the grid at every node of the scenario's quadrature rule.
    """
    from .chaos import build_quadrature

    grid = sc.grid()
    quad = build_quadrature(sc.space, n_nodes or sc.numerics.nz)
    margin = np.zeros(grid.shape, dtype=bool)
    margin[:2, :] = margin[-2:, :] = margin[:, :2] = margin[:, -2:] = True
    for z in quad.nodes:
        f = node_initial(sc, z, grid)
        if f.min() < -1e-14 or f.max() > 1 + 1e-14:
            raise ValueError(f"{sc.name}: initial density leaves [0, 1] at z={z}")
        if np.any(f[margin] != 0):
            raise ValueError(f"{sc.name}: initial support reaches the boundary at z={z}")


def node_point(z):
    """A node row as passed to initial-data callables: float or tuple."""
    z = np.asarray(z, dtype=float).ravel()
    return float(z[0]) if z.size == 1 else tuple(float(v) for v in z)


def node_arg(z):
    """A single node in the random-function convention (length-1 arrays)."""
    z = np.asarray(z, dtype=float).ravel()
    return z[:1] if z.size == 1 else z[:, None]


def _cell_values(fn, sc: Scenario, z, grid: GridSpec):
    """Cell-centre values of ``fn``, or cell averages over ``subcells^2`` points."""
    n = sc.numerics.subcells
    if n == 1:
        X, Y = grid.mesh
        return fn(X, Y, node_point(z))
    fine = GridSpec(grid.a, grid.b, grid.nx * n, grid.ny * n)
    X, Y = fine.mesh
    vals = fn(X, Y, node_point(z))

    def block_mean(f):
        return np.asarray(f, dtype=float).reshape(grid.nx, n, grid.ny, n).mean(axis=(1, 3))

    return tuple(block_mean(f) for f in vals) if isinstance(vals, tuple) else block_mean(vals)


def node_initial(sc: Scenario, z, grid: Optional[GridSpec] = None) -> np.ndarray:
    grid = grid or sc.grid()
    return np.asarray(_cell_values(sc.initial, sc, z, grid), dtype=float)


def node_species_initial(sc: Scenario, z, grid: Optional[GridSpec] = None):
    if sc.species_initial is None:
        raise ValueError(f"scenario {sc.name} has no species block")
    grid = grid or sc.grid()
    return tuple(np.asarray(a, dtype=float) for a in _cell_values(sc.species_initial, sc, z, grid))


def sample_initial(sc: Scenario, projector: Projector, grid: Optional[GridSpec] = None) -> np.ndarray:
    """gPC coefficients of the initial density, shape ``(K, nx, ny)``."""
    grid = grid or sc.grid()
    vals = np.stack([node_initial(sc, z, grid) for z in projector.quad.nodes], axis=-1)
    return np.moveaxis(projector.vectors(vals), -1, 0)


def sample_species_initial(sc: Scenario, projector: Projector, grid: Optional[GridSpec] = None):
    """gPC coefficients of the (P, Q, D) initial densities."""
    grid = grid or sc.grid()
    per_node = [node_species_initial(sc, z, grid) for z in projector.quad.nodes]
    out = []
    for s in range(3):
        vals = np.stack([parts[s] for parts in per_node], axis=-1)
        out.append(np.moveaxis(projector.vectors(vals), -1, 0))
    return tuple(out)


# --------------------------------------------------------------------------
# scenario files
# --------------------------------------------------------------------------

def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines into a dict of strings."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        out[key] = value
    return out


def load_scenario_file(path) -> tuple[str, dict]:
    """Scenario name and overrides from a scenario file."""
    cfg = parse_config_text(Path(path).read_text())
    name = cfg.pop("scenario", None)
    if name is None:
        raise ValueError(f"{path}: missing 'scenario = <name>' entry")
    return name, cfg


def dump_scenario(sc: Scenario) -> str:
    """Scenario file text that rebuilds ``sc`` exactly."""
    lines = [f"scenario = {sc.name}"]
    for f in fields(Numerics):
        val = getattr(sc.numerics, f.name)
        if isinstance(val, tuple):
            val = ", ".join(repr(v) for v in val)
        lines.append(f"numerics.{f.name} = {val if not isinstance(val, float) else repr(val)}")
    for k, v in sc.params.items():
        lines.append(f"params.{k} = {repr(v) if isinstance(v, float) else v}")
    return "\n".join(lines) + "\n"
