"""Fast built-in checks run by the `selftest` command."""
import logging
import math
from typing import Callable, List, Tuple

import numpy as np

from bifi.bifidelity import BiFiSurrogate, SnapshotSet, gramian, project_coeffs, select_points, similarity_Rs
from bifi.experiments import l2_metrics
from bifi.field_models import eval_epsilon, eval_sigma, hf_initial_state, sample_candidates
from bifi.models.fields import BoundarySpec, EpsilonField, InitialData, ScatteringField
from bifi.models.presets import PRESETS
from bifi.models.state import KineticState, SolverConfig, SpatialGrid
from bifi.quadrature import clenshaw_curtis_1d, gauss_legendre_unit, smolyak_grid
from bifi.solvers import hf_step

CHECKS: List[Tuple[str, Callable[[], bool]]] = []


def check(name: str):
    def register(func: Callable[[], bool]):
        CHECKS.append((name, func))
        return func
    return register


@check("sigma at z = 0 equals the base value")
def _sigma_base() -> bool:
    field = ScatteringField()
    return np.allclose(eval_sigma(field, np.linspace(0, 1, 11), np.zeros(5)), 1.0, rtol=0, atol=1e-15)


@check("sigma five-term hand sum at x = 0")
def _sigma_sum() -> bool:
    expected = 1 + 4 / math.pi ** 2 * (1 + 1 / 4 + 1 / 9 + 1 / 16 + 1 / 25)
    return abs(float(eval_sigma(ScatteringField(), 0.0, np.ones(5))) - expected) < 1e-12


@check("mixed-regime epsilon at the centre")
def _epsilon_centre() -> bool:
    value = float(eval_epsilon(EpsilonField(kind="tanh"), 0.5))
    return abs(value - math.sqrt(1e-8 + 2 * math.tanh(1.0))) < 1e-12 and abs(value - 1.23418) < 1e-5


@check("Gauss-Legendre rule integrates v^(2M-1) exactly")
def _gauss_legendre() -> bool:
    vq = gauss_legendre_unit(16)
    return abs(vq.weights.sum() - 1.0) < 1e-14 and abs(vq.weights @ vq.nodes ** 31 - 1 / 32) < 1e-13


@check("Clenshaw-Curtis weights sum to 2")
def _clenshaw_curtis() -> bool:
    return all(abs(clenshaw_curtis_1d(level)[1].sum() - 2.0) < 1e-13 for level in range(6))


@check("sparse grid weights sum to the measure 2^d")
def _sparse_grid() -> bool:
    grid = smolyak_grid(3, 3)
    return abs(grid.weights.sum() - 8.0) < 1e-11


@check("zero preset gives zero parities")
def _zero_state() -> bool:
    state = hf_initial_state(InitialData(kind="zero"), SpatialGrid(10), gauss_legendre_unit(4), np.zeros(5),
                             EpsilonField())
    return not state.r.any() and not state.j.any()


@check("seeded sampling is reproducible")
def _sampling() -> bool:
    return np.array_equal(sample_candidates(5, 3, 7), sample_candidates(5, 3, 7))


@check("orthonormal columns give the identity Gramian")
def _gramian() -> bool:
    dx = 0.25
    vectors = np.eye(4)[:, :3] / math.sqrt(dx)
    return np.allclose(gramian(SnapshotSet(vectors, np.zeros((3, 1)), dx)), np.eye(3), atol=1e-12)


@check("largest-norm snapshot is selected first")
def _selection() -> bool:
    vectors = np.array([[1.0, 0.0, 3.0], [0.0, 2.0, 0.0]])
    return int(select_points(SnapshotSet(vectors, np.zeros((3, 1)), 0.5), 1).indices[0]) == 2


@check("projection of a basis member is a unit vector")
def _projection() -> bool:
    rng = np.random.Generator(np.random.PCG64(1))
    lf = SnapshotSet(rng.standard_normal((10, 4)), rng.uniform(-1, 1, (4, 2)), 0.1)
    hf = SnapshotSet(rng.standard_normal((12, 4)), lf.params, 1 / 12)
    surrogate = BiFiSurrogate.build(lf, hf)
    return np.allclose(project_coeffs(lf.vectors[:, 2], surrogate), np.eye(4)[2], atol=1e-8)


@check("R_s with identical data is 1")
def _similarity() -> bool:
    return similarity_Rs(np.zeros(1), 1, 0.3, 0.3, 2.0, 2.0) == 1.0


@check("constant profile difference has L2 norm |c|")
def _l2() -> bool:
    x = np.zeros(20)
    e_mean, e_std = l2_metrics(x + 0.5, x, x, x - 0.25, 1 / 20)
    return abs(e_mean - 0.5) < 1e-14 and abs(e_std - 0.25) < 1e-14


@check("constant equilibrium is a fixed point of the HF step")
def _equilibrium() -> bool:
    cfg = SolverConfig(grid=SpatialGrid(20, BoundarySpec(kind="periodic")), dt=1e-4, final_time=1e-4,
                       epsilon=EpsilonField(value=1e-8), sigma=ScatteringField(), velocity=gauss_legendre_unit(8))
    state = KineticState(r=np.full((20, 8), 0.7), j=np.zeros((20, 8)))
    after = hf_step(state, cfg, np.full(5, 0.3))
    return np.abs(after.r - 0.7).max() < 1e-14 and np.abs(after.j).max() < 1e-14


@check("all presets construct")
def _presets() -> bool:
    return sorted(PRESETS) == [1, 2, 3, 4, 5] and all(p.hf_config() and p.lf_config() for p in PRESETS.values())


def run_selftest() -> Tuple[int, int]:
    """Run every registered check; returns (passed, total)."""
    passed = 0
    for name, func in CHECKS:
        try:
            ok = bool(func())
        except Exception as e:
            logging.error(f"Check '{name}' raised {type(e).__name__}: {e}")
            ok = False
        if ok:
            passed += 1
        else:
            logging.error(f"Check '{name}' failed")
    return passed, len(CHECKS)
