from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from bifi.errors import ConfigError
from bifi.models.fields import BoundarySpec, EpsilonField, ScatteringField
from bifi.quadrature import VelocityQuadrature, gauss_legendre_unit

EPSILON_MIN = 1e-12
SAFETY = 0.9


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform cell-centred grid on [0, 1]."""
    cells: int
    boundary: BoundarySpec = field(default_factory=BoundarySpec)

    def __post_init__(self):
        if self.cells < 2:
            raise ConfigError(f"grid needs at least 2 cells, got {self.cells}", key="cells")

    @property
    def dx(self) -> float:
        return 1.0 / self.cells

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.cells) + 0.5) * self.dx


@dataclass
class KineticState:
    """Even/odd parities, shape (cells, velocity nodes)."""
    r: np.ndarray
    j: np.ndarray
    t: float = 0.0


@dataclass
class MacroState:
    """Goldstein-Taylor density and scaled flux, shape (cells,)."""
    rho: np.ndarray
    s: np.ndarray
    t: float = 0.0


@dataclass(frozen=True)
class SolverConfig:
    grid: SpatialGrid
    dt: float
    final_time: float
    epsilon: EpsilonField
    sigma: ScatteringField
    velocity: Optional[VelocityQuadrature] = None
    lf_sigma_scale: float = 1.0

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ConfigError(f"time step must be positive, got {self.dt}", key="dt")
        if self.final_time < 0.0:
            raise ConfigError(f"final time must be non-negative, got {self.final_time}", key="final_time")
        if not self.lf_sigma_scale > 0.0:
            raise ConfigError(f"lf_sigma_scale must be positive, got {self.lf_sigma_scale}", key="lf_sigma_scale")
        if np.min(self.epsilon.evaluate(self.grid.centers)) < EPSILON_MIN:
            raise ConfigError(f"epsilon must be >= {EPSILON_MIN}", key="epsilon")

    @property
    def quadrature(self) -> VelocityQuadrature:
        """Velocity set used to build the kinetic initial data (16-point Gauss-Legendre by default)."""
        return self.velocity if self.velocity is not None else gauss_legendre_unit(16)

    def step_schedule(self) -> Tuple[int, float]:
        """Number of full steps and the length of a trailing partial step (0 if none)."""
        T, dt = self.final_time, self.dt
        if T == 0.0:
            return 0, 0.0
        steps = int(round(T / dt))
        remainder = T - steps * dt
        if abs(remainder) <= 1e-12 * T:
            return steps, 0.0
        if remainder < 0.0:
            steps -= 1
            remainder += dt
        return steps, remainder

    def stability_limit(self, nodes: np.ndarray, weights: np.ndarray, sigma_min: float) -> Tuple[float, float]:
        """Hyperbolic and epsilon-uniform diffusive time-step bounds.

        The diffusive bound comes from the epsilon -> 0 limit of the split scheme: a
        wide-stencil explicit diffusion with coefficient <v^2>/sigma plus upwind
        viscosity <s> dx / 2, giving dt <= 2 dx^2 / (D_max + 2 <s> dx).
        """
        dx = self.grid.dx
        eps = self.epsilon.evaluate(self.grid.centers)
        root_phi = np.sqrt(np.minimum(1.0, 1.0 / eps ** 2)).max()
        speed_max = float(np.max(nodes)) * root_phi
        speed_mean = float(weights @ nodes) * root_phi
        diffusion_max = float(weights @ nodes ** 2) / sigma_min
        hyperbolic = dx / speed_max
        diffusive = 2.0 * dx ** 2 / (diffusion_max + 2.0 * speed_mean * dx)
        return hyperbolic, diffusive
