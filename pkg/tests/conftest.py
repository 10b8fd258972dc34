import numpy as np
import pytest

from bifi.models.fields import BoundarySpec, EpsilonField, InitialData, ScatteringField
from bifi.models.presets import Discretization, TestPreset


def tiny_preset(**update) -> TestPreset:
    """Two random parameters, coarse grids, a handful of samples: runs end to end in seconds."""
    preset = TestPreset(
        id=0,
        name="tiny",
        dimension=2,
        sigma=ScatteringField(kind="fourier_cosine", base=1.0, amplitude=4.0, dimension=2),
        epsilon=EpsilonField(kind="constant", value=1e-2),
        initial=InitialData(kind="gaussian_pulse"),
        boundary=BoundarySpec(kind="periodic"),
        final_time=0.01,
        hf=Discretization(cells=20, dt=5e-4),
        lf=Discretization(cells=16, dt=5e-4),
        velocity_nodes=8,
        candidates=30,
        n=4,
        validation=10,
        sparse_level=2,
    )
    if update:
        preset = TestPreset.model_validate({**preset.model_dump(), **update})
    return preset


@pytest.fixture
def tiny():
    return tiny_preset()


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(20240521))
