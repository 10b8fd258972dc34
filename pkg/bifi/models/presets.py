from typing import Dict, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from bifi.models.fields import BoundarySpec, EpsilonField, InflowValue, InitialData, ScatteringField
from bifi.models.state import SolverConfig, SpatialGrid
from bifi.quadrature import gauss_legendre_unit


class Discretization(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    cells: int = Field(ge=2, le=100000)
    dt: float = Field(gt=0.0)

    @property
    def dx(self) -> float:
        return 1.0 / self.cells


class TestPreset(BaseModel):
    """One experiment: random fields, data, discretizations and sample sizes."""

    __test__ = False
    model_config = ConfigDict(extra="forbid", frozen=True)

    id: int = Field(default=0, ge=0, description="Test number 1-5, 0 for custom presets")
    name: str = "custom"
    dimension: int = Field(default=5, ge=1, le=10)
    sigma: ScatteringField = ScatteringField()
    epsilon: EpsilonField = EpsilonField()
    initial: InitialData = InitialData()
    boundary: BoundarySpec = BoundarySpec()
    final_time: float = Field(default=0.01, ge=0.0)
    hf: Discretization = Discretization(cells=40, dt=2.0 / 3.0 * 1e-4)
    lf: Discretization = Discretization(cells=40, dt=2e-4)
    velocity_nodes: int = Field(default=16, ge=1, le=256)
    candidates: int = Field(default=1000, ge=1)
    n: int = Field(default=12, ge=0)
    validation: int = Field(default=200, ge=1)
    sparse_level: int = Field(default=5, ge=0, le=8)
    lf_sigma_scale: float = Field(default=1.0, gt=0.0)
    c1: float = Field(default=1.0, ge=0.0)
    c2: float = Field(default=1.0, ge=0.0)

    @model_validator(mode="after")
    def _check_dimensions(self):
        if self.sigma.dimension != self.dimension:
            raise ValueError(f"sigma has dimension {self.sigma.dimension} but the preset has {self.dimension}")
        components = [self.boundary.left.component, self.boundary.right.component]
        if self.initial.kind == "riemann_step":
            components.append(self.initial.left_component)
        if self.initial.kind == "double_gaussian" and self.dimension < 2:
            raise ValueError("double Gaussian initial data needs dimension >= 2")
        if max(components) >= self.dimension:
            raise ValueError(f"parameter component {max(components)} out of range for dimension {self.dimension}")
        return self

    def hf_config(self) -> SolverConfig:
        return SolverConfig(
            grid=SpatialGrid(self.hf.cells, self.boundary),
            dt=self.hf.dt,
            final_time=self.final_time,
            epsilon=self.epsilon,
            sigma=self.sigma,
            velocity=gauss_legendre_unit(self.velocity_nodes),
        )

    def lf_config(self) -> SolverConfig:
        return SolverConfig(
            grid=SpatialGrid(self.lf.cells, self.boundary),
            dt=self.lf.dt,
            final_time=self.final_time,
            epsilon=self.epsilon,
            sigma=self.sigma,
            velocity=gauss_legendre_unit(self.velocity_nodes),
            lf_sigma_scale=self.lf_sigma_scale,
        )

    def fingerprint(self, fidelity: str) -> dict:
        """Everything that determines one solve of the given fidelity."""
        keys = ["dimension", "sigma", "epsilon", "initial", "boundary", "final_time", "velocity_nodes"]
        if fidelity == "lf":
            keys += ["lf", "lf_sigma_scale"]
        else:
            keys += ["hf"]
        record = self.model_dump(mode="json", include=set(keys))
        record["fidelity"] = fidelity
        return record

    def with_overrides(self, epsilon: Optional[float] = None, n: Optional[int] = None,
                       candidates: Optional[int] = None, lf_sigma_scale: Optional[float] = None) -> "TestPreset":
        update = self.model_dump()
        if epsilon is not None:
            update["epsilon"] = {"kind": "constant", "value": epsilon}
        if n is not None:
            update["n"] = n
        if candidates is not None:
            update["candidates"] = candidates
        if lf_sigma_scale is not None:
            update["lf_sigma_scale"] = lf_sigma_scale
        return TestPreset.model_validate(update)


RANDOM_SIGMA = ScatteringField(kind="fourier_cosine", base=1.0, amplitude=4.0, dimension=5)
DOUBLE_GAUSSIAN = InitialData(kind="double_gaussian")

PRESETS: Dict[int, TestPreset] = {
    1: TestPreset(
        id=1,
        name="random cross-section, inflow boundary",
        sigma=RANDOM_SIGMA,
        epsilon=EpsilonField(kind="constant", value=1e-8),
        initial=InitialData(kind="zero"),
        boundary=BoundarySpec(kind="inflow", left=InflowValue(constant=1.0), right=InflowValue(constant=0.0)),
        final_time=0.01,
        hf=Discretization(cells=40, dt=2.0 / 3.0 * 1e-4),
        lf=Discretization(cells=40, dt=2e-4),
        lf_sigma_scale=3.0,
    ),
    2: TestPreset(
        id=2,
        name="random cross-section and initial data",
        sigma=RANDOM_SIGMA,
        epsilon=EpsilonField(kind="constant", value=1e-2),
        initial=DOUBLE_GAUSSIAN,
        boundary=BoundarySpec(kind="periodic"),
        final_time=0.02,
        hf=Discretization(cells=40, dt=1e-4),
        lf=Discretization(cells=25, dt=2e-4),
    ),
    3: TestPreset(
        id=3,
        name="Riemann problem",
        sigma=RANDOM_SIGMA,
        epsilon=EpsilonField(kind="constant", value=1e-8),
        initial=InitialData(kind="riemann_step", left_value=1.0, left_slope=0.4, left_component=0),
        boundary=BoundarySpec(
            kind="inflow",
            left=InflowValue(constant=1.0, slope=0.4, component=0),
            right=InflowValue(constant=0.0),
        ),
        final_time=0.01,
        hf=Discretization(cells=80, dt=5e-5),
        lf=Discretization(cells=25, dt=2e-4),
        lf_sigma_scale=3.0,
    ),
    4: TestPreset(
        id=4,
        name="mixed regime",
        sigma=ScatteringField(kind="constant", base=1.0),
        epsilon=EpsilonField(kind="tanh", floor=1e-8, slope=5.5, center=0.5),
        initial=DOUBLE_GAUSSIAN,
        boundary=BoundarySpec(kind="periodic"),
        final_time=0.01,
        hf=Discretization(cells=50, dt=5e-5),
        lf=Discretization(cells=50, dt=1e-4),
    ),
    5: TestPreset(
        id=5,
        name="discontinuous cross-section",
        sigma=ScatteringField(kind="piecewise_fourier", base=1.0, amplitude=4.0, dimension=5,
                              breakpoint=0.5, right_value=0.2),
        epsilon=EpsilonField(kind="constant", value=0.001 ** 0.5),
        initial=InitialData(kind="gaussian_pulse", pulse_width=0.01, pulse_center=0.5),
        boundary=BoundarySpec(kind="periodic"),
        final_time=0.01,
        hf=Discretization(cells=50, dt=2.0 / 3.0 * 1e-4),
        lf=Discretization(cells=40, dt=2e-4),
        n=15,
    ),
}


def get_preset(preset_id: int) -> TestPreset:
    if preset_id not in PRESETS:
        raise ValueError(f"unknown preset {preset_id}, expected one of {sorted(PRESETS)}")
    return PRESETS[preset_id]
