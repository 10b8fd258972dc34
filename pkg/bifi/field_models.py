"""Evaluation of random fields, kinetic/macroscopic initial states and candidate sampling."""
import numpy as np

from bifi.models.fields import EpsilonField, InitialData, ScatteringField
from bifi.quadrature import VelocityQuadrature
from bifi.models.state import KineticState, MacroState, SpatialGrid


def eval_sigma(field: ScatteringField, x, z) -> np.ndarray:
    return field.evaluate(x, z)


def eval_epsilon(eps: EpsilonField, x) -> np.ndarray:
    return eps.evaluate(x)


def hf_initial_state(preset: InitialData, grid: SpatialGrid, vq: VelocityQuadrature, z,
                     epsilon: EpsilonField) -> KineticState:
    """Split f0 into even part r and odd part j = (f(v) - f(-v)) / (2 eps)."""
    x = grid.centers
    forward = preset.density(x, vq.nodes, z)
    backward = preset.density(x, -vq.nodes, z)
    eps = epsilon.evaluate(x)[:, None]
    r = 0.5 * (forward + backward)
    j = 0.5 * (forward - backward) / eps
    return KineticState(r=r, j=j, t=0.0)


def lf_initial_state(preset: InitialData, grid: SpatialGrid, vq: VelocityQuadrature, z,
                     epsilon: EpsilonField) -> MacroState:
    """rho = velocity average of r, s = 2 * int_0^1 v j dv, so that rho(0) matches the HF rbar(0)."""
    kinetic = hf_initial_state(preset, grid, vq, z, epsilon)
    rho = kinetic.r @ vq.weights
    s = 2.0 * (kinetic.j @ (vq.weights * vq.nodes))
    return MacroState(rho=rho, s=s, t=0.0)


def sample_candidates(d: int, N: int, seed: int) -> np.ndarray:
    """N uniform samples on [-1, 1]^d, one per row, from a seeded PCG64 generator."""
    if N < 1:
        raise ValueError(f"number of candidates must be >= 1, got {N}")
    if d < 1:
        raise ValueError(f"parameter dimension must be >= 1, got {d}")
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.uniform(-1.0, 1.0, size=(N, d))
