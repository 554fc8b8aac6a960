"""Proliferating / quiescent / dead three-species model.

All species move with one velocity derived from the total density::

    dP/dt + div(P u) = G C P - a P + b Q
    dQ/dt + div(Q u) = a P - b Q - d Q
    dD/dt + div(D u) = d Q - mu D

In the gPC setting ``a, b, d, mu`` become projected K x K matrices and the
growth term uses the nutrient matrix of the total density.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .chaos import GpcBasis, Projector, build_basis, build_quadrature, node_args
from .grid import GridSpec
from .kernel import StepParams, correct_velocity, flux_update, predict_velocity
from .nutrient import assemble_nutrient_matrix
from .scenarios import (COUPLINGS, Scenario, node_arg, node_species_initial,
                        sample_species_initial)
from .sg import Sink, growth_sources, march, velocity_at_rest

SPECIES = ("P", "Q", "D")


@dataclass
class SpeciesState:
    """gPC coefficients ``(K, nx, ny)`` of P, Q, D and the shared velocity."""

    P: np.ndarray
    Q: np.ndarray
    D: np.ndarray
    u: np.ndarray
    v: np.ndarray
    t: float
    basis: Optional[GpcBasis] = None

    @property
    def total(self) -> np.ndarray:
        return self.P + self.Q + self.D

    def fields(self) -> dict:
        return {"rho": self.total, "P": self.P, "Q": self.Q, "D": self.D}

    def copy(self) -> "SpeciesState":
        return SpeciesState(self.P.copy(), self.Q.copy(), self.D.copy(), self.u.copy(),
                            self.v.copy(), self.t, self.basis)


@dataclass(frozen=True)
class RateMatrices:
    """Exchange-rate operators, each ``(K, K)``."""

    a: np.ndarray
    b: np.ndarray
    d: np.ndarray
    mu: np.ndarray


def _apply(A: np.ndarray, f: np.ndarray) -> np.ndarray:
    return np.einsum("kl,lxy->kxy", A, f)


def project_rates(scenario: Scenario, projector: Projector) -> RateMatrices:
    z = node_args(projector.quad)
    n = projector.quad.size
    sp = scenario.species

    def mat(fn):
        vals = np.broadcast_to(np.asarray(fn(z), dtype=float), (n,))
        return projector.matrices(vals)

    return RateMatrices(mat(sp.a), mat(sp.b), mat(sp.d), mat(sp.mu))


def node_rates(scenario: Scenario, z) -> RateMatrices:
    """Rates frozen at one node, as 1 x 1 matrices."""
    sp = scenario.species
    zz = node_arg(z)
    return RateMatrices(*(np.asarray(fn(zz), dtype=float).reshape(1, 1) * np.ones((1, 1))
                          for fn in (sp.a, sp.b, sp.d, sp.mu)))


def reaction_sources(C: np.ndarray, state: SpeciesState, rates: RateMatrices,
                     coupling: str = "galerkin"):
    """Right-hand sides ``(S_P, S_Q, S_D)`` of the three species."""
    aP = _apply(rates.a, state.P)
    bQ = _apply(rates.b, state.Q)
    dQ = _apply(rates.d, state.Q)
    S_P = growth_sources(C, state.P, coupling) - aP + bQ
    S_Q = aP - bQ - dQ
    S_D = dQ - _apply(rates.mu, state.D)
    return S_P, S_Q, S_D


def species_step(state: SpeciesState, C: np.ndarray, rates: RateMatrices, params: StepParams,
                 grid: GridSpec, coupling: str = "galerkin") -> SpeciesState:
    """One step of the three-species system given the growth matrix ``C``.

    Per mode: the velocity is predicted from the total density and total
    source, every species is transported with it, and the velocity is
    corrected from the new total density.
    """
    S_P, S_Q, S_D = reaction_sources(C, state, rates, coupling)
    total = state.total
    S_tot = S_P + S_Q + S_D
    K = total.shape[0]
    out = {name: np.empty_like(total) for name in ("P", "Q", "D", "u", "v")}
    for k in range(K):
        us, vs = predict_velocity(total[k], state.u[k], state.v[k], S_tot[k], params, grid)
        out["P"][k] = flux_update(state.P[k], us, vs, S_P[k], params, grid)
        out["Q"][k] = flux_update(state.Q[k], us, vs, S_Q[k], params, grid)
        out["D"][k] = flux_update(state.D[k], us, vs, S_D[k], params, grid)
        new_total = out["P"][k] + out["Q"][k] + out["D"][k]
        out["u"][k], out["v"][k] = correct_velocity(new_total, params, grid, us, vs)
    return SpeciesState(out["P"], out["Q"], out["D"], out["u"], out["v"],
                        state.t + params.dt, state.basis)


def _at_rest(P, Q, D, params, grid, basis=None) -> SpeciesState:
    u, v = velocity_at_rest(P + Q + D, params, grid)
    return SpeciesState(P, Q, D, u, v, 0.0, basis)


def _emitter(snaps, sink):
    def emit(st):
        snaps.append((st.t, st.copy()))
        if sink is not None:
            for name, f in st.fields().items():
                for k in range(f.shape[0]):
                    sink(st.t, (name, k), f[k])
    return emit


class SpeciesGalerkin:
    """SG solver for the three-species model."""

    def __init__(self, scenario: Scenario, order: Optional[int] = None,
                 n_nodes: Optional[int] = None, coupling: Optional[str] = None):
        if scenario.species is None:
            raise ValueError(f"scenario {scenario.name} has no species block")
        num = scenario.numerics
        self.scenario = scenario
        self.grid = scenario.grid()
        self.params = num.step_params()
        self.basis = build_basis(scenario.space, num.order if order is None else order)
        self.quad = build_quadrature(scenario.space, n_nodes or num.nz)
        self.projector = Projector(self.basis, self.quad)
        self.rates = project_rates(scenario, self.projector)
        self.coupling = coupling or num.coupling
        if self.coupling not in COUPLINGS:
            raise ValueError(f"unknown coupling {self.coupling!r}")

    def initial_state(self) -> SpeciesState:
        P, Q, D = sample_species_initial(self.scenario, self.projector, self.grid)
        return _at_rest(P, Q, D, self.params, self.grid, self.basis)

    def growth_matrix(self, state: SpeciesState) -> np.ndarray:
        return assemble_nutrient_matrix(state.total, self.scenario.closure, self.projector,
                                        self.grid)

    def step(self, state: SpeciesState) -> SpeciesState:
        return species_step(state, self.growth_matrix(state), self.rates, self.params,
                            self.grid, self.coupling)

    def run(self, T: Optional[float] = None, snapshots=None, sink: Optional[Sink] = None,
            state: Optional[SpeciesState] = None):
        num = self.scenario.numerics
        T = num.T if T is None else T
        times = num.snapshot_times() if snapshots is None else list(snapshots)
        snaps = []
        final = march(state or self.initial_state(), self.step, T, self.params.dt, times,
                      _emitter(snaps, sink))
        return final, snaps


def run_species_node(scenario: Scenario, z, T: Optional[float] = None, snapshots=None):
    """Deterministic three-species run at node ``z`` (single-mode stacks)."""
    if scenario.species is None:
        raise ValueError(f"scenario {scenario.name} has no species block")
    num = scenario.numerics
    grid = scenario.grid()
    params = num.step_params()
    T = num.T if T is None else T
    times = num.snapshot_times() if snapshots is None else list(snapshots)
    P, Q, D = (f[None] for f in node_species_initial(scenario, z, grid))
    rates = node_rates(scenario, z)
    zz = node_arg(z)

    def stepper(st):
        h = scenario.closure.rates(st.total, zz, grid)[0]
        return species_step(st, h[:, :, None, None], rates, params, grid)

    snaps = []
    final = march(_at_rest(P, Q, D, params, grid), stepper, T, params.dt, times,
                  _emitter(snaps, None))
    return final, snaps


def species_node_state(state: SpeciesState):
    """Drop the singleton mode axis of a node run, for moment helpers."""
    return {name: f[0] for name, f in state.fields().items()}
