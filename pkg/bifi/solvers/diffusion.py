from enum import Enum
from typing import Optional

import numpy as np

from bifi.errors import StabilityError
from bifi.field_models import lf_initial_state
from bifi.models.fields import InitialData
from bifi.models.state import SolverConfig


class DiffusionKind(str, Enum):
    LTE_THIRD = "lte_third"   # D = 1 / (3 sigma), limit of the transport equation
    GT_FULL = "gt_full"       # D = 1 / sigma_eff, limit of the Goldstein-Taylor model


class DiffusionSolver:
    """Explicit finite-volume solver for rho_t = (D rho_x)_x, the limiting equation of both models."""

    name = "diffusion"

    def __init__(self, cfg: SolverConfig, kind: DiffusionKind = DiffusionKind.LTE_THIRD):
        self.cfg = cfg
        self.kind = DiffusionKind(kind)
        self.grid = cfg.grid
        self.dx = cfg.grid.dx

    def coefficient(self, z) -> np.ndarray:
        sigma = self.cfg.sigma.evaluate(self.grid.centers, z)
        if self.kind is DiffusionKind.LTE_THIRD:
            return 1.0 / (3.0 * sigma)
        return 1.0 / (self.cfg.lf_sigma_scale * sigma)

    def _face_coefficient(self, D: np.ndarray) -> np.ndarray:
        if self.grid.boundary.periodic:
            padded = np.concatenate([D[-1:], D, D[:1]])
        else:
            padded = np.concatenate([D[:1], D, D[-1:]])
        # harmonic mean keeps the flux continuous across coefficient jumps
        return 2.0 * padded[:-1] * padded[1:] / (padded[:-1] + padded[1:])

    def _pad(self, rho: np.ndarray, z) -> np.ndarray:
        boundary = self.grid.boundary
        if boundary.periodic:
            return np.concatenate([rho[-1:], rho, rho[:1]])
        left = 2.0 * boundary.left.evaluate(z) - rho[0]
        right = 2.0 * boundary.right.evaluate(z) - rho[-1]
        return np.concatenate([[left], rho, [right]])

    def solve(self, z, preset: InitialData, initial: Optional[np.ndarray] = None) -> np.ndarray:
        """Integrate from the velocity average of f0 (or an explicit initial profile) to the final time."""
        D = self.coefficient(z)
        limit = self.dx ** 2 / (2.0 * D.max())
        if self.cfg.dt > limit:
            raise StabilityError(
                f"diffusion time step {self.cfg.dt:.6g} exceeds dx^2/(2 max D) = {limit:.6g}", key="dt"
            )
        if initial is None:
            rho = lf_initial_state(preset, self.grid, self.cfg.quadrature, z, self.cfg.epsilon).rho
        else:
            rho = np.array(initial, dtype=float)
        face = self._face_coefficient(D)
        steps, remainder = self.cfg.step_schedule()
        schedule = [self.cfg.dt] * steps + ([remainder] if remainder > 0.0 else [])
        for dt in schedule:
            padded = self._pad(rho, z)
            flux = face * (padded[1:] - padded[:-1]) / self.dx
            rho = rho + dt / self.dx * (flux[1:] - flux[:-1])
        return rho
