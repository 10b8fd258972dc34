import logging
import math
import os
import time
from contextlib import contextmanager
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from bifi.bifidelity import (
    BiFiSurrogate,
    SnapshotSet,
    bifi_moments,
    expected_error_bound,
    inplane_Re,
    project_coeffs,
    select_points,
    similarity_Rs,
    span_distances,
)
from bifi.config import settings
from bifi.errors import DegenerateSampleError, PhaseError, SolverDivergedError, SurrogateConstructionError
from bifi.field_models import sample_candidates
from bifi.models.fields import InitialData
from bifi.models.presets import TestPreset
from bifi.models.report import Baseline, ConvergenceRow, DiagnosticRecord, ErrorDiagnostics, ExperimentReport
from bifi.quadrature import SparseGrid, smolyak_grid
from bifi.solvers import BaseSolver, GoldsteinTaylorSolver, KineticSolver
from bifi.utils.cache import SnapshotCache
from bifi.utils.csvio import ensure_dir, write_csv, write_json, write_text
from bifi.utils.hashing import config_key
from bifi.utils.parallel import ordered_map, resolve_workers


def l2_metrics(approx_mean, approx_std, ref_mean, ref_std, dx: float) -> Tuple[float, float]:
    """Discrete L2 distances sqrt(dx * sum (a - r)^2) of the mean and standard deviation profiles."""
    arrays = [np.asarray(a, dtype=float) for a in (approx_mean, approx_std, ref_mean, ref_std)]
    if len({a.shape for a in arrays}) != 1:
        raise ValueError(f"profile lengths differ: {[a.shape for a in arrays]}")
    e_mean = math.sqrt(dx * float(np.sum((arrays[0] - arrays[2]) ** 2)))
    e_std = math.sqrt(dx * float(np.sum((arrays[1] - arrays[3]) ** 2)))
    return e_mean, e_std


def weighted_moments(values: np.ndarray, nodes: np.ndarray, weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Pointwise mean and standard deviation of values (one sample per row) under probability weights.

    Rows are reduced in lexicographic node order, so the result does not depend on how the nodes are listed.
    """
    nodes = np.atleast_2d(np.asarray(nodes, dtype=float))
    order = np.lexsort(nodes.T[::-1])
    values = np.asarray(values, dtype=float)[order]
    weights = np.asarray(weights, dtype=float)[order]
    mean = weights @ values
    variance = weights @ (values - mean) ** 2
    return mean, np.sqrt(np.maximum(0.0, variance))


def lf_baseline(lf_values: np.ndarray, grid: SparseGrid, lf_x: np.ndarray, hf_x: np.ndarray,
                periodic: bool) -> Tuple[np.ndarray, np.ndarray]:
    """LF-only sparse-grid statistics, linearly interpolated onto the HF cell centres."""
    mean, std = weighted_moments(lf_values, grid.nodes, grid.probability_weights)
    period = 1.0 if periodic else None
    return np.interp(hf_x, lf_x, mean, period=period), np.interp(hf_x, lf_x, std, period=period)


class _SampleSolve:
    """Solve one (index, z) item; divergence is tagged with the sample index."""

    def __init__(self, solver: BaseSolver, initial: InitialData):
        self.solver = solver
        self.initial = initial

    def __call__(self, item):
        index, z = item
        try:
            return self.solver.solve(z, self.initial)
        except SolverDivergedError as e:
            raise SolverDivergedError(e.solver, e.step, sample=index) from e


class Experiment:
    """Bi-fidelity collocation for one preset, from candidate sweep to report."""

    def __init__(self, preset: TestPreset, seed: Optional[int] = None, validation_seed: Optional[int] = None,
                 workers: Optional[int] = None, cache: Optional[SnapshotCache] = None):
        self.preset = preset
        self.seed = settings.DEFAULT_SEED if seed is None else seed
        self.validation_seed = settings.VALIDATION_SEED if validation_seed is None else validation_seed
        self.workers = resolve_workers(workers)
        self.cache = cache
        self.timings: Dict[str, float] = {}

        self.hf_solver = KineticSolver(preset.hf_config())
        self.lf_solver = GoldsteinTaylorSolver(preset.lf_config())
        logging.info(self.hf_solver.describe())
        logging.info(self.lf_solver.describe())

    @contextmanager
    def phase(self, name: str):
        logging.info(f"Phase {name} started")
        start = time.perf_counter()
        try:
            yield
        except PhaseError:
            raise
        except Exception as e:
            logging.error(f"Phase {name} failed: {e}")
            raise PhaseError(name, e) from e
        finally:
            elapsed = time.perf_counter() - start
            self.timings[name] = self.timings.get(name, 0.0) + elapsed
            logging.info(f"Phase {name} took {elapsed:.2f}s")

    def solve_many(self, fidelity: str, params: np.ndarray) -> np.ndarray:
        """QoI for every row of params, one row per sample; cached samples are not recomputed."""
        solver = self.hf_solver if fidelity == "hf" else self.lf_solver
        params = np.atleast_2d(np.asarray(params, dtype=float))
        key = config_key(self.preset.fingerprint(fidelity))
        found = self.cache.lookup(key, fidelity, params) if self.cache is not None else {}
        missing = [i for i in range(params.shape[0]) if i not in found]
        if missing:
            logging.info(f"Running {len(missing)} {fidelity} solves on {self.workers} workers "
                         f"({len(found)} cached)")
            results = ordered_map(_SampleSolve(solver, self.preset.initial),
                                  [(i, params[i]) for i in missing], self.workers)
            found.update(zip(missing, results))
            if self.cache is not None:
                self.cache.store(key, fidelity, params[missing], results)
        return np.vstack([found[i] for i in range(params.shape[0])])

    def reference(self, grid: SparseGrid) -> Tuple[np.ndarray, np.ndarray]:
        if grid.dimension != self.preset.dimension:
            raise ValueError(f"sparse grid has dimension {grid.dimension}, the preset {self.preset.dimension}")
        values = self.solve_many("hf", grid.nodes)
        return weighted_moments(values, grid.nodes, grid.probability_weights)

    def _in_plane_ratios(self, surrogate: BiFiSurrogate, levels: Sequence[int]) -> Dict[int, float]:
        """R_e at each level k, nan when the (k+1)-th point was not selected."""
        ratios = {}
        for k in levels:
            ratios[k] = inplane_Re(surrogate.gamma[k], surrogate, k) if k < surrogate.size else math.nan
        return ratios

    def _diagnose(self, surrogate: BiFiSurrogate, k: int, Re_next: float, val_params: np.ndarray,
                  lf_val: np.ndarray, hf_val: np.ndarray) -> DiagnosticRecord:
        level = surrogate.truncate(k)
        dx = level.hf_snapshots.ip_weight
        reconstructions = (level.hf_snapshots.vectors @ project_coeffs(lf_val.T, level)).T
        hf_norms = np.sqrt(dx * np.sum(hf_val ** 2, axis=1))
        if np.any(hf_norms <= 0.0):
            raise DegenerateSampleError(f"validation sample {int(np.argmin(hf_norms))} has a zero HF solution")
        true_err = np.sqrt(dx * np.sum((reconstructions - hf_val) ** 2, axis=1)) / hf_norms

        lf_dist, lf_norm = span_distances(lf_val, level.lf_basis, level.gram_factor)
        hf_dist, hf_norm = span_distances(hf_val, level.hf_snapshots, level.hf_factor)
        similarity = np.array([
            similarity_Rs(z, k, a, b, c, d) for z, a, b, c, d in zip(val_params, lf_dist, hf_dist, lf_norm, hf_norm)
        ])
        if math.isnan(Re_next):
            bound = bound_mean_form = math.nan
        else:
            bound, bound_mean_form = expected_error_bound(lf_val, surrogate, k, Re_next,
                                                          self.preset.c1, self.preset.c2)
        return DiagnosticRecord(
            k=k,
            true_err_mean=float(true_err.mean()),
            bound=bound,
            bound_mean_form=bound_mean_form,
            Rs_median=float(np.median(similarity)),
            Rs_min=float(similarity.min()),
            Rs_max=float(similarity.max()),
            Re=Re_next,
        )

    def run(self, n: Optional[int] = None, n_list: Optional[Sequence[int]] = None) -> ExperimentReport:
        """
        Run the whole pipeline.

        Args:
            n: Number of HF samples behind the reported profiles, the preset's n by default
            n_list: Sizes tabulated in the convergence table, 1..n by default

        Returns:
            ExperimentReport with profiles, errors, convergence table and diagnostics
        """
        preset = self.preset
        n = preset.n if n is None else n
        n_list = sorted(set(n_list)) if n_list else list(range(1, n + 1))
        target = max([n] + n_list)
        if target > preset.candidates:
            raise ValueError(f"{target} HF samples requested from {preset.candidates} candidates")
        logging.info(f"Starting test {preset.id} ({preset.name}) with n={n}, {preset.candidates} candidates")

        with self.phase("candidates"):
            params = sample_candidates(preset.dimension, preset.candidates, self.seed)
            candidates = SnapshotSet(self.solve_many("lf", params).T, params, self.lf_solver.dx)

        with self.phase("sparse-grid"):
            grid = smolyak_grid(preset.dimension, preset.sparse_level)
            lf_grid = self.solve_many("lf", grid.nodes)

        with self.phase("reference"):
            mean_ref, std_ref = self.reference(grid)

        with self.phase("baseline"):
            base_mean, base_std = lf_baseline(lf_grid, grid, self.lf_solver.grid.centers,
                                              self.hf_solver.grid.centers, preset.boundary.periodic)
            base = Baseline(**dict(zip(("e_mean", "e_std"),
                                       l2_metrics(base_mean, base_std, mean_ref, std_ref, self.hf_solver.dx))))
            logging.info(f"LF baseline errors: e_mean={base.e_mean:.3e}, e_std={base.e_std:.3e}")

        if target == 0:
            return self._baseline_report(grid, base_mean, base_std, mean_ref, std_ref, base)

        with self.phase("selection"):
            selection = select_points(candidates, min(target + 1, len(candidates)))
            if selection.degenerate:
                raise SurrogateConstructionError("every low-fidelity candidate snapshot is zero")
            logging.info(f"Selected {len(selection)} points, first pivots {np.round(selection.pivots[:3], 8)}")

        with self.phase("hf-selected"):
            gamma = params[selection.indices]
            hf_selected = SnapshotSet(self.solve_many("hf", gamma).T, gamma, self.hf_solver.dx)

        with self.phase("surrogate"):
            surrogate = BiFiSurrogate.build(candidates.subset(selection.indices), hf_selected)
            if n > surrogate.size:
                logging.warning(f"Only {surrogate.size} independent points available, using n={surrogate.size}")
            n = min(n, surrogate.size)

        with self.phase("bifi-moments"):
            mean_bf, std_bf = bifi_moments(surrogate.truncate(n), grid.nodes, grid.weights, lf_values=lf_grid)
            e_mean, e_std = l2_metrics(mean_bf, std_bf, mean_ref, std_ref, self.hf_solver.dx)
            logging.info(f"Bi-fidelity errors with n={n}: e_mean={e_mean:.3e}, e_std={e_std:.3e}")

        with self.phase("validation"):
            val_params = sample_candidates(preset.dimension, preset.validation, self.validation_seed)
            lf_val = self.solve_many("lf", val_params)
            hf_val = self.solve_many("hf", val_params)

        levels = [k for k in range(1, target + 1) if k <= surrogate.size]
        with self.phase("diagnostics"):
            ratios = self._in_plane_ratios(surrogate, levels)
            diagnostics = ErrorDiagnostics(records=[
                self._diagnose(surrogate, k, ratios[k], val_params, lf_val, hf_val) for k in levels
            ])

        with self.phase("convergence"):
            rows = []
            for m in n_list:
                if m > surrogate.size:
                    logging.warning(f"Skipping n={m}: only {surrogate.size} points selected")
                    continue
                m_mean, m_std = bifi_moments(surrogate.truncate(m), grid.nodes, grid.weights, lf_values=lf_grid)
                record = next(r for r in diagnostics.records if r.k == m)
                rows.append(ConvergenceRow(
                    n=m,
                    **dict(zip(("e_mean", "e_std"), l2_metrics(m_mean, m_std, mean_ref, std_ref, self.hf_solver.dx))),
                    bound=record.bound,
                    Re=record.Re,
                ))

        return ExperimentReport(
            preset=preset.id,
            name=preset.name,
            n=n,
            x=self.hf_solver.grid.centers.tolist(),
            mean_bf=mean_bf.tolist(),
            std_bf=std_bf.tolist(),
            mean_ref=mean_ref.tolist(),
            std_ref=std_ref.tolist(),
            e_mean=e_mean,
            e_std=e_std,
            lf_baseline=base,
            convergence=rows,
            diagnostics=diagnostics,
            selected=selection.indices.tolist(),
            pivots=selection.pivots.tolist(),
            sparse_nodes=len(grid),
            jitter=surrogate.jitter,
            stability=self._stability(),
            timings=dict(self.timings),
        )

    def _stability(self) -> Dict[str, float]:
        return {"hf": self.hf_solver.stability_ratio(), "lf": self.lf_solver.stability_ratio()}

    def _baseline_report(self, grid, base_mean, base_std, mean_ref, std_ref, base: Baseline) -> ExperimentReport:
        return ExperimentReport(
            preset=self.preset.id,
            name=self.preset.name,
            n=0,
            x=self.hf_solver.grid.centers.tolist(),
            mean_bf=base_mean.tolist(),
            std_bf=base_std.tolist(),
            mean_ref=mean_ref.tolist(),
            std_ref=std_ref.tolist(),
            e_mean=base.e_mean,
            e_std=base.e_std,
            lf_baseline=base,
            convergence=[ConvergenceRow(n=0, e_mean=base.e_mean, e_std=base.e_std, bound=math.nan, Re=math.nan)],
            sparse_nodes=len(grid),
            stability=self._stability(),
            timings=dict(self.timings),
        )


def reference_statistics(preset: TestPreset, grid: SparseGrid, workers: Optional[int] = None,
                         cache: Optional[SnapshotCache] = None) -> Tuple[np.ndarray, np.ndarray]:
    """HF mean and standard deviation over a sparse grid, weights normalized to a probability measure."""
    return Experiment(preset, workers=workers, cache=cache).reference(grid)


def run_test(preset: TestPreset, overrides: Optional[dict] = None, seed: Optional[int] = None,
             validation_seed: Optional[int] = None, workers: Optional[int] = None,
             cache: Optional[SnapshotCache] = None) -> ExperimentReport:
    if overrides:
        preset = preset.with_overrides(**overrides)
    return Experiment(preset, seed=seed, validation_seed=validation_seed, workers=workers, cache=cache).run()


def convergence_sweep(preset: TestPreset, n_list: Sequence[int], seed: Optional[int] = None,
                      validation_seed: Optional[int] = None, workers: Optional[int] = None,
                      cache: Optional[SnapshotCache] = None) -> pd.DataFrame:
    """Table (n, e_mean, e_std, bound, Re) from one selection pass truncated at every n."""
    if not n_list:
        raise ValueError("n_list must not be empty")
    experiment = Experiment(preset, seed=seed, validation_seed=validation_seed, workers=workers, cache=cache)
    return experiment.run(n=max(n_list), n_list=n_list).convergence_frame()


def write_report(report: ExperimentReport, out_dir: str, config_echo: Optional[str] = None) -> None:
    """Write config.echo, profiles.csv, convergence.csv, diagnostics.csv and summary.json."""
    ensure_dir(out_dir)
    if config_echo is not None:
        write_text(config_echo, os.path.join(out_dir, "config.echo"))
        report = report.model_copy(update={"config_echo": config_echo})
    write_csv(report.profiles_frame(), os.path.join(out_dir, "profiles.csv"))
    write_csv(report.convergence_frame(), os.path.join(out_dir, "convergence.csv"))
    write_csv(report.diagnostics.to_frame(), os.path.join(out_dir, "diagnostics.csv"))
    write_json(report.model_dump(), os.path.join(out_dir, "summary.json"))
    logging.info(f"Report written to {out_dir}")
