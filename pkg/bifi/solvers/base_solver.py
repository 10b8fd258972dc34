from dataclasses import dataclass
from typing import Tuple

import numpy as np

from bifi.errors import SolverDivergedError, StabilityError
from bifi.models.fields import InitialData
from bifi.models.state import SAFETY, SolverConfig


@dataclass(frozen=True)
class Coefficients:
    """Per-sample coefficients of the split scheme, cell arrays shaped (cells, 1)."""
    rate: np.ndarray            # sigma / eps^2
    stiff: np.ndarray           # (1 - eps^2 phi) / eps^2
    sigma_left: float
    sigma_right: float
    kappa_left: np.ndarray      # eps v / (sigma dx) at the walls, per velocity
    kappa_right: np.ndarray
    inflow_left: float
    inflow_right: float


class BaseSolver:
    """
    Base class for the asymptotic-preserving parity solvers.

    One step is a pointwise implicit relaxation followed by explicit upwind
    transport of the non-stiff pair r_t + v j_x = 0, j_t + phi v r_x = 0 in
    characteristic variables, phi = min(1, 1/eps^2). Subclasses choose the
    velocity set, the scattering coefficient, the initial state and the
    quantity of interest.
    """

    name = "base"

    def __init__(self, cfg: SolverConfig):
        """Initialize the solver and check the time step against the stability bound."""
        self.cfg = cfg
        self.grid = cfg.grid
        self.dx = cfg.grid.dx
        self.v, self.w = self.velocity_set()

        eps = cfg.epsilon.evaluate(self.grid.centers)[:, None]
        self.eps = eps
        self.eps2 = eps ** 2
        self.phi = np.minimum(1.0, 1.0 / self.eps2)
        if self.grid.boundary.periodic:
            padded = np.concatenate([self.phi[-1:], self.phi, self.phi[:1]])
        else:
            padded = np.concatenate([self.phi[:1], self.phi, self.phi[-1:]])
        self.phi_face = 0.5 * (padded[:-1] + padded[1:])
        self.speed = self.v * np.sqrt(self.phi_face)
        self._check_stability()

    def velocity_set(self) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError("Subclasses must implement velocity_set method")

    def scattering(self, z) -> np.ndarray:
        """Scattering coefficient at cell centres for parameter z."""
        raise NotImplementedError("Subclasses must implement scattering method")

    def scattering_lower_bound(self) -> float:
        raise NotImplementedError("Subclasses must implement scattering_lower_bound method")

    def initial_arrays(self, preset: InitialData, z) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError("Subclasses must implement initial_arrays method")

    def quantity(self, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError("Subclasses must implement quantity method")

    def stability_limit(self) -> float:
        hyperbolic, diffusive = self.cfg.stability_limit(self.v, self.w, self.scattering_lower_bound())
        return SAFETY * min(hyperbolic, diffusive)

    def _check_stability(self) -> None:
        limit = self.stability_limit()
        if self.cfg.dt > limit:
            raise StabilityError(
                f"{self.name} time step {self.cfg.dt:.6g} exceeds the stability limit {limit:.6g}", key="dt"
            )

    def coefficients(self, z) -> Coefficients:
        sigma = self.scattering(z)[:, None]
        boundary = self.grid.boundary
        kappa = self.eps * self.v / (sigma * self.dx)
        return Coefficients(
            rate=sigma / self.eps2,
            stiff=(1.0 - self.eps2 * self.phi) / self.eps2,
            sigma_left=float(sigma[0, 0]),
            sigma_right=float(sigma[-1, 0]),
            kappa_left=kappa[0],
            kappa_right=kappa[-1],
            inflow_left=boundary.left.evaluate(z),
            inflow_right=boundary.right.evaluate(z),
        )

    def _pad_even(self, r: np.ndarray, co: Coefficients) -> np.ndarray:
        if self.grid.boundary.periodic:
            return np.concatenate([r[-1:], r, r[:1]])
        # r -+ (eps/sigma) v r_x = g at the wall, wall value the mean of ghost and interior
        left = (co.inflow_left - (0.5 - co.kappa_left) * r[0]) / (0.5 + co.kappa_left)
        right = (co.inflow_right - (0.5 - co.kappa_right) * r[-1]) / (0.5 + co.kappa_right)
        return np.concatenate([left[None, :], r, right[None, :]])

    def _pad_odd(self, j: np.ndarray, rp: np.ndarray, co: Coefficients) -> np.ndarray:
        if self.grid.boundary.periodic:
            return np.concatenate([j[-1:], j, j[:1]])
        # sigma j = -v r_x at the wall
        wall_left = -self.v * (rp[1] - rp[0]) / (co.sigma_left * self.dx)
        wall_right = -self.v * (rp[-1] - rp[-2]) / (co.sigma_right * self.dx)
        return np.concatenate([(2.0 * wall_left - j[0])[None, :], j, (2.0 * wall_right - j[-1])[None, :]])

    def relax(self, r: np.ndarray, j: np.ndarray, co: Coefficients, dt: float):
        """Implicit relaxation stage; returns the relaxed pair and the padded even part."""
        lam = dt * co.rate
        rbar = r @ self.w
        r = (r + lam * rbar[:, None]) / (1.0 + lam)
        rp = self._pad_even(r, co)
        gradient = (rp[2:] - rp[:-2]) / (2.0 * self.dx)
        j = (j - dt * co.stiff * self.v * gradient) / (1.0 + lam)
        return r, j, rp

    def transport(self, r: np.ndarray, j: np.ndarray, rp: np.ndarray, co: Coefficients, dt: float):
        """Explicit upwind stage with wave speeds +-v sqrt(phi)."""
        jp = self._pad_odd(j, rp, co)
        flux_r = 0.5 * self.v * (jp[:-1] + jp[1:]) - 0.5 * self.speed * (rp[1:] - rp[:-1])
        flux_j = 0.5 * self.phi_face * self.v * (rp[:-1] + rp[1:]) - 0.5 * self.speed * (jp[1:] - jp[:-1])
        ratio = dt / self.dx
        return r - ratio * (flux_r[1:] - flux_r[:-1]), j - ratio * (flux_j[1:] - flux_j[:-1])

    def advance(self, r: np.ndarray, j: np.ndarray, co: Coefficients, dt: float):
        r, j, rp = self.relax(r, j, co, dt)
        return self.transport(r, j, rp, co, dt)

    def check_finite(self, r: np.ndarray, j: np.ndarray, step: int) -> None:
        if not np.isfinite(r.sum() + j.sum()):
            raise SolverDivergedError(self.name, step)

    def run(self, r: np.ndarray, j: np.ndarray, z, t: float = 0.0):
        """Integrate (r, j) from time t to the configured final time."""
        co = self.coefficients(z)
        steps, remainder = self.cfg.step_schedule()
        dt = self.cfg.dt
        for step in range(steps):
            r, j = self.advance(r, j, co, dt)
            self.check_finite(r, j, step + 1)
        if remainder > 0.0:
            r, j = self.advance(r, j, co, remainder)
            self.check_finite(r, j, steps + 1)
        return r, j

    def solve(self, z, preset: InitialData) -> np.ndarray:
        """
        Run one sample from the preset's initial data and return the quantity of interest.

        Args:
            z: Parameter vector
            preset: Initial data of the experiment

        Returns:
            Quantity of interest at the final time, one value per cell
        """
        r, j = self.initial_arrays(preset, z)
        r, j = self.run(r, j, z)
        return self.quantity(r)

    def __call__(self, z, preset: InitialData) -> np.ndarray:
        return self.solve(z, preset)

    def stability_ratio(self) -> float:
        return self.cfg.dt / self.stability_limit()

    def describe(self) -> str:
        return (f"{self.name}: {self.grid.cells} cells, dt={self.cfg.dt:.4g}, "
                f"T={self.cfg.final_time:.4g}, stability ratio {self.stability_ratio():.3f}")
