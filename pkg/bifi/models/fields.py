from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


def _check_dimension(z: np.ndarray, dimension: int) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.shape[0] != dimension:
        raise ValueError(f"parameter vector has shape {z.shape}, expected ({dimension},)")
    return z


def fourier_series(x, z: np.ndarray, basis: str = "cos") -> np.ndarray:
    """Evaluate sum_i b(2*pi*i*x) z_i / (i*pi)^2 for b = cos or sin."""
    x = np.asarray(x, dtype=float)
    modes = np.arange(1, z.shape[0] + 1)
    arg = 2.0 * np.pi * np.multiply.outer(x, modes)
    wave = np.cos(arg) if basis == "cos" else np.sin(arg)
    return (wave / (modes * np.pi) ** 2) @ z


class ScatteringField(BaseModel):
    """Random scattering coefficient sigma(x, z)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["fourier_cosine", "fourier_sine", "piecewise_fourier", "constant"] = "fourier_cosine"
    base: float = Field(default=1.0, ge=0.0)
    amplitude: float = 4.0
    dimension: int = Field(default=5, ge=1, le=10)
    breakpoint: float = Field(default=0.5, gt=0.0, lt=1.0)
    right_value: float = Field(default=0.2, gt=0.0)

    @model_validator(mode="after")
    def _check_positive(self):
        if self.lower_bound() <= 0.0:
            raise ValueError(
                f"scattering field can reach non-positive values: lower bound {self.lower_bound():.6g}"
            )
        return self

    def lower_bound(self) -> float:
        """Smallest value sigma can take over [0,1] x [-1,1]^d."""
        if self.kind == "constant":
            return self.base
        modes = np.arange(1, self.dimension + 1)
        tail = float(np.sum(1.0 / (modes * np.pi) ** 2))
        lower = self.base - abs(self.amplitude) * tail
        if self.kind == "piecewise_fourier":
            return min(lower, self.right_value)
        return lower

    def evaluate(self, x, z) -> np.ndarray:
        z = _check_dimension(z, self.dimension)
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full(x.shape, self.base)
        basis = "sin" if self.kind == "fourier_sine" else "cos"
        smooth = self.base + self.amplitude * fourier_series(x, z, basis)
        if self.kind == "piecewise_fourier":
            return np.where(x <= self.breakpoint, smooth, self.right_value)
        return smooth


class EpsilonField(BaseModel):
    """Knudsen number, constant or the smooth mixed-regime profile."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["constant", "tanh"] = "constant"
    value: float = Field(default=1e-8, ge=1e-12)
    floor: float = Field(default=1e-8, ge=0.0)
    slope: float = 5.5
    center: float = 0.5

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full(x.shape, self.value)
        shift = self.slope * (x - self.center)
        radicand = self.floor + np.tanh(1.0 - shift) + np.tanh(1.0 + shift)
        assert np.all(radicand > 0.0), "negative epsilon^2 in mixed-regime profile"
        return np.sqrt(radicand)


class InitialData(BaseModel):
    """Initial particle density f0(x, v, z) of a preset."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["zero", "double_gaussian", "riemann_step", "gaussian_pulse"] = "zero"

    # double Gaussian in velocity
    rho0_amplitude: float = 3.0
    rho1_amplitude: float = 2.0
    t0_slope: float = 0.6
    t1_amplitude: float = 0.2

    # Riemann step
    left_value: float = 1.0
    left_slope: float = 0.4
    left_component: int = Field(default=0, ge=0)
    step_location: float = Field(default=0.5, gt=0.0, lt=1.0)

    # Gaussian pulse
    pulse_width: float = Field(default=0.01, gt=0.0)
    pulse_center: float = 0.5

    def density(self, x, v, z) -> np.ndarray:
        """f0 on the outer grid x (N,) by v (M,), v may be negative."""
        x = np.asarray(x, dtype=float)[:, None]
        v = np.asarray(v, dtype=float)[None, :]
        z = np.asarray(z, dtype=float)
        shape = (x.shape[0], v.shape[1])
        if self.kind == "zero":
            return np.zeros(shape)
        if self.kind == "riemann_step":
            left = self.left_value + self.left_slope * z[self.left_component]
            return np.broadcast_to(np.where(x < self.step_location, left, 0.0), shape).copy()
        if self.kind == "gaussian_pulse":
            xi = self.pulse_width
            pulse = np.exp(-((x - self.pulse_center) ** 2) / (2.0 * xi)) / (2.0 * np.pi * xi)
            return np.broadcast_to(pulse, shape).copy()
        if z.shape[0] < 2:
            raise ValueError("double Gaussian initial data needs at least two random parameters")
        xs = x[:, 0]
        rho0 = (1.0 + self.rho0_amplitude * fourier_series(xs, z, "sin"))[:, None]
        rho1 = (1.0 + self.rho1_amplitude * fourier_series(xs, z, "cos"))[:, None]
        t0 = ((5.0 + 2.0 * np.cos(2.0 * np.pi * x)) / 20.0) * (1.0 + self.t0_slope * z[0])
        t1 = 0.5 + self.t1_amplitude * np.cos(2.0 * np.pi * x) * z[1]
        return rho0 * np.exp(-(((v - 0.5) / t0) ** 2)) + rho1 * np.exp(-(((v + 0.75) / t1) ** 2))


class InflowValue(BaseModel):
    """Affine inflow value g(z) = constant + slope * z[component]."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    constant: float = 0.0
    slope: float = 0.0
    component: int = Field(default=0, ge=0)

    def evaluate(self, z) -> float:
        z = np.asarray(z, dtype=float)
        if self.slope == 0.0:
            return self.constant
        return float(self.constant + self.slope * z[self.component])


class BoundarySpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["periodic", "inflow"] = "periodic"
    left: InflowValue = InflowValue()
    right: InflowValue = InflowValue()

    @property
    def periodic(self) -> bool:
        return self.kind == "periodic"
