"""Radial nutrient closures and the projected growth matrix.

The nutrient level depends on the tumour radius ``R``, which is read off the
density separately at every quadrature node, so ``R = R(t, z)``.  The
growth rate ``h = G0(z) c(r, z)`` (optionally replaced by a constant outside
a cutoff radius) is then projected onto the gPC basis cell by cell.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .chaos import Projector, node_args
from .grid import GridSpec
from .specfun import bessel_i0, bessel_i1, bessel_k01

NO_TUMOUR_RADIUS = 1e-8
DEFAULT_DELTA_RHO = 0.03
KINDS = ("vitro", "vivo")


@dataclass(frozen=True)
class NutrientModel:
    kind: str = "vivo"
    c_B: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown nutrient model {self.kind!r}; choose from {KINDS}")
        if not self.c_B > 0:
            raise ValueError("far-field nutrient level c_B must be positive")


def vivo_denominator(R):
    """``K0(R) I1(R) + K1(R) I0(R)``; equals ``1/R`` by the Wronskian."""
    k0, k1 = bessel_k01(R)
    return k0 * bessel_i1(R) + k1 * bessel_i0(R)


def vivo_coefficients(R, c_B: float = 1.0):
    """Interior amplitude ``a0`` and exterior amplitude ``a1`` of the vivo closure."""
    k0, k1 = bessel_k01(R)
    i0 = bessel_i0(R)
    i1 = bessel_i1(R)
    den = k0 * i1 + k1 * i0
    return c_B * k1 / den, -c_B * i1 / den


def c_vitro(r, R: float, c_B: float = 1.0):
    """``c_B I0(r) / I0(R)`` inside the tumour, ``c_B`` outside."""
    r = np.asarray(r, dtype=float)
    if R <= NO_TUMOUR_RADIUS:
        out = np.full(r.shape, c_B)
    else:
        out = np.where(r <= R, c_B * bessel_i0(r) / bessel_i0(R), c_B)
    return float(out) if out.ndim == 0 else out


def c_vivo(r, R: float, c_B: float = 1.0):
    """Vivo closure: ``a0 I0(r)`` for ``r <= R``, ``c_B + a1 K0(r)`` beyond.

    Value and radial derivative are continuous at ``r = R``.
    """
    r = np.asarray(r, dtype=float)
    if R <= NO_TUMOUR_RADIUS:
        out = np.full(r.shape, c_B)
    else:
        a0, a1 = vivo_coefficients(R, c_B)
        inside = r <= R
        out = np.empty(r.shape)
        out[inside] = a0 * bessel_i0(r[inside])
        if np.any(~inside):
            out[~inside] = c_B + a1 * bessel_k01(r[~inside])[0]
    return float(out) if out.ndim == 0 else out


def estimate_radius(rho: np.ndarray, grid: GridSpec, delta: float = DEFAULT_DELTA_RHO) -> float:
    """Largest cell-centre distance from the origin among cells with ``rho > delta``."""
    return float(estimate_radii(np.asarray(rho)[None], grid, delta)[0])


def estimate_radii(rho_nodes: np.ndarray, grid: GridSpec, delta: float = DEFAULT_DELTA_RHO) -> np.ndarray:
    """Vectorised :func:`estimate_radius` over a leading node axis."""
    flagged = rho_nodes > delta
    return np.where(flagged, grid.radius, 0.0).reshape(rho_nodes.shape[0], -1).max(axis=1)


@lru_cache(maxsize=16)
def _bessel_tables(grid: GridSpec):
    r = grid.radius
    i0 = bessel_i0(r)
    k0 = np.zeros_like(r)
    pos = r > 0
    k0[pos] = bessel_k01(r[pos])[0]
    return i0, k0


def concentration(radii: np.ndarray, model: NutrientModel, grid: GridSpec) -> np.ndarray:
    """Nutrient level on the grid for each tumour radius, shape ``(len(radii), nx, ny)``."""
    radii = np.asarray(radii, dtype=float)
    i0, k0 = _bessel_tables(grid)
    r = grid.radius
    out = np.full((radii.size,) + grid.shape, model.c_B)
    for q, R in enumerate(radii):
        if R <= NO_TUMOUR_RADIUS:
            continue
        inside = r <= R
        if model.kind == "vitro":
            out[q][inside] = model.c_B * i0[inside] / bessel_i0(R)
        else:
            a0, a1 = vivo_coefficients(R, model.c_B)
            out[q] = np.where(inside, a0 * i0, model.c_B + a1 * k0)
    return out


@lru_cache(maxsize=16)
def _sub_radii(grid: GridSpec, n: int) -> np.ndarray:
    """Sorted radii of ``n x n`` sub-points per cell, shape ``(nx, ny, n*n)``."""
    fine = GridSpec(grid.a, grid.b, grid.nx * n, grid.ny * n)
    r = fine.radius.reshape(grid.nx, n, grid.ny, n).transpose(0, 2, 1, 3)
    return np.sort(r.reshape(grid.nx, grid.ny, n * n), axis=-1)


def inside_fraction(grid: GridSpec, radius: float, n: int) -> np.ndarray:
    """Fraction of each cell's ``n x n`` sub-points lying within ``radius``."""
    if n == 1:
        return (grid.radius <= radius).astype(float)
    sub = _sub_radii(grid, n)
    return (sub <= radius).sum(axis=-1) / (n * n)


def _as_node_values(fn, z, n: int) -> np.ndarray:
    vals = np.asarray(fn(z), dtype=float)
    return np.broadcast_to(vals, (n,)).copy() if vals.ndim == 0 else vals.reshape(n)


@dataclass(frozen=True)
class GrowthClosure:
    """Growth rate ``h(x, z) = G0(z) c(r, z)``.

    With ``cutoff`` set, ``h`` is replaced by ``outside`` wherever the cell
    centre lies beyond ``cutoff(z)``.  With ``subcells > 1`` the switch is
    cell-averaged instead: ``h`` blends the two values by the fraction of the
    cell inside the cutoff.  ``G0`` and ``cutoff`` follow the random-function
    convention of :func:`sgtumor.chaos.node_args`.
    """

    model: NutrientModel
    G0: Callable
    cutoff: Optional[Callable] = None
    outside: float = 1.0
    delta_rho: float = DEFAULT_DELTA_RHO
    subcells: int = 1

    def rates(self, rho_nodes: np.ndarray, z, grid: GridSpec) -> np.ndarray:
        """Growth rate at every node and cell.

        ``rho_nodes`` has shape ``(Nq, nx, ny)``; ``z`` holds the matching
        node coordinates (``node_args`` convention).
        """
        n = rho_nodes.shape[0]
        radii = estimate_radii(rho_nodes, grid, self.delta_rho)
        c = concentration(radii, self.model, grid)
        g0 = _as_node_values(self.G0, z, n)
        h = g0[:, None, None] * c
        if self.cutoff is not None:
            rc = _as_node_values(self.cutoff, z, n)
            if self.subcells == 1:
                h = np.where(grid.radius[None] > rc[:, None, None], self.outside, h)
            else:
                frac = np.stack([inside_fraction(grid, R, self.subcells) for R in rc])
                h = frac * h + (1.0 - frac) * self.outside
        return h


def assemble_nutrient_matrix(rho_modes: np.ndarray, closure: GrowthClosure, projector: Projector,
                             grid: GridSpec) -> np.ndarray:
    """Per-cell Galerkin matrix of the growth rate, shape ``(nx, ny, K, K)``.

    ``rho_modes`` (shape ``(K, nx, ny)``) is the density whose support sets
    the tumour radius; the three-species model passes its total density.  It
    is reconstructed at every quadrature node, radius and nutrient level are
    evaluated node by node, and the rate is projected per cell.
    """
    rho_nodes = np.tensordot(projector.phi, rho_modes, axes=([1], [0]))  # (Nq, nx, ny)
    h = closure.rates(rho_nodes, node_args(projector.quad), grid)
    return projector.matrices(np.moveaxis(h, 0, -1))
