"""Moments, error norms, slices and the SG-versus-SC studies."""
from __future__ import annotations

import csv
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .chaos import build_quadrature, order_for_size
from .collocation import sc_moments, sc_run
from .grid import GridSpec
from .scenarios import Scenario
from .sg import StochasticGalerkin


@dataclass
class MomentPair:
    mean: np.ndarray
    sd: np.ndarray

    def __post_init__(self):
        if np.any(self.sd < 0):
            raise ValueError("standard deviation must be non-negative")


def sg_moments(rho) -> MomentPair:
    """Mean and SD from gPC coefficients stacked on the first axis.

    Accepts a coefficient array or any object with a ``rho`` attribute.
    """
    coeffs = np.asarray(getattr(rho, "rho", rho), dtype=float)
    sd = np.sqrt(np.sum(coeffs[1:] ** 2, axis=0)) if coeffs.shape[0] > 1 else np.zeros(coeffs.shape[1:])
    return MomentPair(coeffs[0].copy(), sd)


def sc_moment_pair(ensemble, field: str = "rho") -> MomentPair:
    mean, sd = sc_moments(ensemble, field)
    return MomentPair(mean, sd)


def l2_error(a: np.ndarray, b: np.ndarray, grid: GridSpec) -> float:
    """``sqrt(dx dy sum (a - b)^2)``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.shape != grid.shape:
        raise ValueError(f"field shapes {a.shape}, {b.shape} do not match grid {grid.shape}")
    return float(np.sqrt(grid.cell_area * np.sum((a - b) ** 2)))


def l1_norm(a: np.ndarray, grid: GridSpec) -> float:
    """Cell-area weighted L1 norm, summed over any leading (mode) axes."""
    return float(grid.cell_area * np.abs(a).sum())


def slice_at(f: np.ndarray, grid: GridSpec, x0: float):
    """Values along the grid column nearest to ``x = x0``: ``(y, f[i, :])``."""
    i = grid.column_index(x0)
    return grid.y.copy(), np.asarray(f)[i].copy()


@dataclass
class ErrorReport:
    K: int
    error_mean: float
    error_sd: float
    nz: int
    m: float
    dx: float
    dt: float
    T: float
    diff_mean: Optional[np.ndarray] = field(default=None, repr=False)
    diff_sd: Optional[np.ndarray] = field(default=None, repr=False)

    def row(self) -> dict:
        d = asdict(self)
        d.pop("diff_mean")
        d.pop("diff_sd")
        return d


def compare(sg: MomentPair, sc: MomentPair, grid: GridSpec, **meta) -> ErrorReport:
    return ErrorReport(error_mean=l2_error(sg.mean, sc.mean, grid),
                       error_sd=l2_error(sg.sd, sc.sd, grid),
                       diff_mean=sg.mean - sc.mean, diff_sd=sg.sd - sc.sd, **meta)


def sc_reference(scenario: Scenario, T: float, nz: Optional[int] = None, workers=None) -> MomentPair:
    quad = build_quadrature(scenario.space, nz or scenario.numerics.nz)
    final, _ = sc_run(scenario, quad, T=T, snapshots=[], workers=workers)
    return sc_moment_pair(final)


def convergence_study(scenario: Scenario, K_list: Sequence[int], T: Optional[float] = None,
                      ref_nz: Optional[int] = None, workers=None) -> list[ErrorReport]:
    """SG errors against one SC reference for each basis size in ``K_list``.

    ``K_list`` holds basis sizes (number of modes); each must be a complete
    total-degree basis size for the scenario's random dimension.
    """
    num = scenario.numerics
    T = num.T if T is None else T
    nz = ref_nz or num.nz
    grid = scenario.grid()
    ref = sc_reference(scenario, T, nz, workers)
    reports = []
    for K in K_list:
        if K < 1:
            raise ValueError("basis sizes must be >= 1")
        P = order_for_size(scenario.dim, K)
        solver = StochasticGalerkin(scenario, order=P, n_nodes=nz)
        final, _ = solver.run(T=T, snapshots=[])
        reports.append(compare(sg_moments(final), ref, grid, K=K, nz=nz, m=num.m, dx=num.dx,
                               dt=num.dt, T=T))
    return reports


def m_sweep(scenario: Scenario, ms: Sequence[float], T: Optional[float] = None,
            order: Optional[int] = None) -> dict:
    """Final SG coefficient stacks keyed by ``m``."""
    out = {}
    for m in ms:
        sc = replace(scenario, numerics=replace(scenario.numerics, m=float(m)))
        final, _ = StochasticGalerkin(sc, order=order).run(T=T, snapshots=[])
        out[float(m)] = final.rho
    return out


def m_differences(results: dict, grid: GridSpec) -> list[tuple[float, float]]:
    """``(m, ||rho_m - rho_2m||_L1)`` for every ``m`` whose double is present."""
    rows = []
    for m in sorted(results):
        if 2 * m in results:
            rows.append((m, l1_norm(results[m] - results[2 * m], grid)))
    return rows


def _median_time(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def timing_comparison(scenario: Scenario, T_list: Sequence[float], sg_order: Optional[int] = None,
                      sc_nz: Optional[int] = None, repeats: int = 3, workers: int = 1) -> list[dict]:
    """Median-of-``repeats`` wall clock of SG and SC runs to each final time."""
    quad = build_quadrature(scenario.space, sc_nz or scenario.numerics.nz)
    rows = []
    for T in T_list:
        def run_sg():
            StochasticGalerkin(scenario, order=sg_order).run(T=T, snapshots=[])

        def run_sc():
            sc_run(scenario, quad, T=T, snapshots=[], workers=workers)

        t_sg = _median_time(run_sg, repeats)
        t_sc = _median_time(run_sc, repeats)
        rows.append({"T": T, "sg_seconds": t_sg, "sc_seconds": t_sc,
                     "ratio": t_sc / t_sg if t_sg > 0 else float("nan")})
    return rows


def write_table(rows: Sequence[dict], path) -> None:
    """CSV with a header taken from the first row."""
    rows = list(rows)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        if not rows:
            return
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        for r in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


def is_nonincreasing(values: Sequence[float], rel_tol: float = 0.0, abs_tol: float = 0.0) -> bool:
    """True when each value is at most the previous one, up to the tolerances."""
    return all(b <= a * (1 + rel_tol) + abs_tol for a, b in zip(values, values[1:]))
