from typing import Tuple

import numpy as np

from bifi.field_models import hf_initial_state
from bifi.models.fields import InitialData
from bifi.models.state import KineticState, SolverConfig
from bifi.solvers.base_solver import BaseSolver


class KineticSolver(BaseSolver):
    """
    High-fidelity solver for the even/odd parity form of the linear transport equation.
    The quantity of interest is rbar = int_0^1 r dv on the Gauss-Legendre velocity set.
    """

    name = "high-fidelity"

    def __init__(self, cfg: SolverConfig):
        if cfg.velocity is None:
            raise ValueError("high-fidelity solver needs a velocity quadrature")
        super().__init__(cfg)

    def velocity_set(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.cfg.velocity.nodes), np.asarray(self.cfg.velocity.weights)

    def scattering(self, z) -> np.ndarray:
        return self.cfg.sigma.evaluate(self.grid.centers, z)

    def scattering_lower_bound(self) -> float:
        return self.cfg.sigma.lower_bound()

    def initial_arrays(self, preset: InitialData, z):
        state = hf_initial_state(preset, self.grid, self.cfg.velocity, z, self.cfg.epsilon)
        return state.r, state.j

    def quantity(self, r: np.ndarray) -> np.ndarray:
        return r @ self.w

    def step(self, state: KineticState, z) -> KineticState:
        r, j = self.advance(state.r, state.j, self.coefficients(z), self.cfg.dt)
        self.check_finite(r, j, 1)
        return KineticState(r=r, j=j, t=state.t + self.cfg.dt)
