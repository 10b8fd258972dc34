from dataclasses import dataclass
from typing import Tuple

import numpy as np

from bifi.field_models import lf_initial_state
from bifi.models.fields import InitialData
from bifi.models.state import MacroState
from bifi.solvers.base_solver import BaseSolver


@dataclass(frozen=True)
class MacroCoefficients:
    """Per-sample coefficients of the two-component update, plain cell and face vectors."""
    rate: np.ndarray            # sigma_eff / eps^2, cells
    stiff: np.ndarray           # (1 - eps^2 phi) / eps^2, cells
    flux_weights: np.ndarray    # (2, faces): 1/2 for the density flux, phi/2 for the s flux
    viscosity: np.ndarray       # faces: half the wave speed sqrt(phi)
    inflow: Tuple[float, float, float, float]
    wall_sigma: Tuple[float, float]


class GoldsteinTaylorSolver(BaseSolver):
    """
    Low-fidelity solver for the macroscopic Goldstein-Taylor system
    rho_t + s_x = 0, s_t + rho_x / eps^2 = -sigma_eff s / eps^2.

    The scheme is the parity splitting restricted to the single velocity v = 1,
    so the relaxation leaves rho untouched and only damps s. The pair is kept in
    one padded (2, cells + 2) array, row 0 holding rho and row 1 holding s, so a
    step costs a handful of vector operations.
    """

    name = "low-fidelity"

    def velocity_set(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.array([1.0]), np.array([1.0])

    def scattering(self, z) -> np.ndarray:
        return self.cfg.lf_sigma_scale * self.cfg.sigma.evaluate(self.grid.centers, z)

    def scattering_lower_bound(self) -> float:
        return self.cfg.lf_sigma_scale * self.cfg.sigma.lower_bound()

    def initial_arrays(self, preset: InitialData, z):
        state = lf_initial_state(preset, self.grid, self.cfg.quadrature, z, self.cfg.epsilon)
        return state.rho, state.s

    def quantity(self, r: np.ndarray) -> np.ndarray:
        return r.copy()

    def macro_coefficients(self, z) -> MacroCoefficients:
        sigma = self.scattering(z)
        eps, eps2, phi = self.eps[:, 0], self.eps2[:, 0], self.phi[:, 0]
        phi_face = self.phi_face[:, 0]
        if self.grid.boundary.periodic:
            inflow = (0.0, 0.0, 0.0, 0.0)
        else:
            # rho -+ (eps/sigma) rho_x = g at the wall: ghost = g / (1/2 + k) - (1/2 - k) / (1/2 + k) * interior
            boundary = self.grid.boundary
            k_left = float(eps[0] / (sigma[0] * self.dx))
            k_right = float(eps[-1] / (sigma[-1] * self.dx))
            inflow = (
                boundary.left.evaluate(z) / (0.5 + k_left), (0.5 - k_left) / (0.5 + k_left),
                boundary.right.evaluate(z) / (0.5 + k_right), (0.5 - k_right) / (0.5 + k_right),
            )
        return MacroCoefficients(
            rate=sigma / eps2,
            stiff=(1.0 - eps2 * phi) / eps2,
            flux_weights=np.vstack([np.full(phi_face.shape, 0.5), 0.5 * phi_face]),
            viscosity=0.5 * self.speed[:, 0],
            inflow=inflow,
            wall_sigma=(float(sigma[0] * self.dx), float(sigma[-1] * self.dx)),
        )

    def stage_weights(self, co: MacroCoefficients, dt: float) -> Tuple[np.ndarray, np.ndarray]:
        """Damping 1/(1 + dt rate) and the coupling to the centred density difference."""
        damping = 1.0 / (1.0 + dt * co.rate)
        coupling = dt * co.stiff * damping / (2.0 * self.dx)
        return damping, coupling

    def pack(self, rho: np.ndarray, s: np.ndarray) -> np.ndarray:
        pair = np.empty((2, self.grid.cells + 2))
        pair[0, 1:-1] = rho
        pair[1, 1:-1] = s
        return pair

    def _pad_density(self, pair: np.ndarray, co: MacroCoefficients) -> None:
        rho = pair[0]
        if self.grid.boundary.periodic:
            rho[0], rho[-1] = rho[-2], rho[1]
        else:
            g_left, c_left, g_right, c_right = co.inflow
            rho[0] = g_left - c_left * rho[1]
            rho[-1] = g_right - c_right * rho[-2]

    def _pad_flux(self, pair: np.ndarray, co: MacroCoefficients) -> None:
        rho, s = pair
        if self.grid.boundary.periodic:
            s[0], s[-1] = s[-2], s[1]
        else:
            # sigma s = -rho_x at the wall
            s[0] = -2.0 * (rho[1] - rho[0]) / co.wall_sigma[0] - s[1]
            s[-1] = -2.0 * (rho[-1] - rho[-2]) / co.wall_sigma[1] - s[-2]

    def relax_flux(self, pair: np.ndarray, co: MacroCoefficients, dt: float) -> None:
        """Implicit relaxation of s in place; rho is left unchanged."""
        damping, coupling = self.stage_weights(co, dt)
        self._relax(pair, co, damping, coupling)

    def _relax(self, pair, co, damping, coupling) -> None:
        self._pad_density(pair, co)
        pair[1, 1:-1] = damping * pair[1, 1:-1] - coupling * (pair[0, 2:] - pair[0, :-2])

    def _transport(self, pair: np.ndarray, co: MacroCoefficients, ratio: float) -> None:
        self._pad_flux(pair, co)
        jump = pair[:, 1:] - pair[:, :-1]
        total = pair[::-1, 1:] + pair[::-1, :-1]
        flux = co.flux_weights * total - co.viscosity * jump
        pair[:, 1:-1] -= ratio * (flux[:, 1:] - flux[:, :-1])

    def _advance(self, pair, co, damping, coupling, ratio) -> None:
        self._relax(pair, co, damping, coupling)
        self._transport(pair, co, ratio)

    def _check(self, pair: np.ndarray, step: int) -> None:
        self.check_finite(pair[0, 1:-1], pair[1, 1:-1], step)

    def run(self, r: np.ndarray, j: np.ndarray, z, t: float = 0.0):
        """Integrate (rho, s) to the configured final time; the step loop works on one padded array."""
        co = self.macro_coefficients(z)
        pair = self.pack(r, j)
        steps, remainder = self.cfg.step_schedule()
        damping, coupling = self.stage_weights(co, self.cfg.dt)
        ratio = self.cfg.dt / self.dx
        for step in range(steps):
            self._advance(pair, co, damping, coupling, ratio)
            self._check(pair, step + 1)
        if remainder > 0.0:
            damping, coupling = self.stage_weights(co, remainder)
            self._advance(pair, co, damping, coupling, remainder / self.dx)
            self._check(pair, steps + 1)
        return pair[0, 1:-1].copy(), pair[1, 1:-1].copy()

    def step(self, state: MacroState, z) -> MacroState:
        co = self.macro_coefficients(z)
        pair = self.pack(state.rho, state.s)
        damping, coupling = self.stage_weights(co, self.cfg.dt)
        self._advance(pair, co, damping, coupling, self.cfg.dt / self.dx)
        self._check(pair, 1)
        return MacroState(rho=pair[0, 1:-1].copy(), s=pair[1, 1:-1].copy(), t=state.t + self.cfg.dt)
