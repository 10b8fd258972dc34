"""Deterministic solvers: high-fidelity transport, low-fidelity Goldstein-Taylor and the diffusion limit."""
from typing import Union

import numpy as np

from bifi.models.fields import InitialData
from bifi.models.state import KineticState, MacroState, SolverConfig
from bifi.quadrature import VelocityQuadrature
from bifi.solvers.base_solver import BaseSolver
from bifi.solvers.diffusion import DiffusionKind, DiffusionSolver
from bifi.solvers.goldstein_taylor import GoldsteinTaylorSolver
from bifi.solvers.kinetic import KineticSolver


def compute_rbar(state: KineticState, vq: VelocityQuadrature) -> np.ndarray:
    return state.r @ vq.weights


def hf_step(state: KineticState, cfg: SolverConfig, z) -> KineticState:
    return KineticSolver(cfg).step(state, z)


def hf_solve(cfg: SolverConfig, z, preset: InitialData) -> np.ndarray:
    return KineticSolver(cfg).solve(z, preset)


def lf_step(state: MacroState, cfg: SolverConfig, z) -> MacroState:
    return GoldsteinTaylorSolver(cfg).step(state, z)


def lf_solve(cfg: SolverConfig, z, preset: InitialData) -> np.ndarray:
    return GoldsteinTaylorSolver(cfg).solve(z, preset)


def diffusion_solve(cfg: SolverConfig, z, preset: InitialData,
                    D_kind: Union[DiffusionKind, str] = DiffusionKind.LTE_THIRD) -> np.ndarray:
    return DiffusionSolver(cfg, D_kind).solve(z, preset)


__all__ = [
    "BaseSolver", "KineticSolver", "GoldsteinTaylorSolver", "DiffusionSolver", "DiffusionKind",
    "compute_rbar", "hf_step", "hf_solve", "lf_step", "lf_solve", "diffusion_solve",
]
