"""Experiment pipeline: reference statistics, bi-fidelity moments, diagnostics and report files."""
import json
import math
import os

import numpy as np
import pandas as pd
import pytest

import bifi.experiments as experiments
from bifi.errors import PhaseError, SolverDivergedError
from bifi.experiments import (
    Experiment,
    convergence_sweep,
    l2_metrics,
    lf_baseline,
    reference_statistics,
    run_test,
    weighted_moments,
    write_report,
)
from bifi.models.fields import ScatteringField
from bifi.models.presets import PRESETS
from bifi.quadrature import smolyak_grid
from bifi.solvers import KineticSolver
from tests.conftest import tiny_preset


def deterministic_preset(**update):
    """One dummy parameter that nothing depends on."""
    return tiny_preset(
        dimension=1,
        sigma=ScatteringField(kind="constant", base=1.0, dimension=1).model_dump(),
        hf={"cells": 20, "dt": 1e-3},
        lf={"cells": 20, "dt": 1e-3},
        candidates=5,
        n=3,
        validation=4,
        sparse_level=2,
        **update,
    )


@pytest.fixture(scope="module")
def tiny_report():
    return Experiment(tiny_preset(), workers=1).run()


class TestMetrics:
    def test_identical_profiles(self):
        x = np.linspace(0.0, 1.0, 10)
        assert l2_metrics(x, x, x, x, 0.1) == (0.0, 0.0)

    def test_constant_difference(self):
        base = np.zeros(40)
        e_mean, e_std = l2_metrics(base + 0.3, base, base, base + 0.2, 1 / 40)
        assert e_mean == pytest.approx(0.3, rel=1e-14)
        assert e_std == pytest.approx(0.2, rel=1e-14)

    def test_matches_loop(self, rng):
        a, b, c, d = rng.standard_normal((4, 25))
        dx = 1 / 25
        e_mean, e_std = l2_metrics(a, b, c, d, dx)
        assert e_mean == pytest.approx(math.sqrt(sum(dx * (p - q) ** 2 for p, q in zip(a, c))), rel=1e-12)
        assert e_std == pytest.approx(math.sqrt(sum(dx * (p - q) ** 2 for p, q in zip(b, d))), rel=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="lengths differ"):
            l2_metrics(np.zeros(3), np.zeros(3), np.zeros(4), np.zeros(3), 0.1)


class TestWeightedMoments:
    def test_linear_quantity(self):
        grid = smolyak_grid(2, 2)
        values = grid.nodes[:, :1]
        mean, std = weighted_moments(values, grid.nodes, grid.probability_weights)
        assert mean[0] == pytest.approx(0.0, abs=1e-14)
        assert std[0] == pytest.approx(math.sqrt(1.0 / 3.0), rel=1e-12)

    def test_node_order_does_not_matter(self, rng):
        grid = smolyak_grid(3, 3)
        values = rng.standard_normal((len(grid), 7))
        mean, std = weighted_moments(values, grid.nodes, grid.probability_weights)
        order = rng.permutation(len(grid))
        shuffled = weighted_moments(values[order], grid.nodes[order], grid.probability_weights[order])
        np.testing.assert_array_equal(shuffled[0], mean)
        np.testing.assert_array_equal(shuffled[1], std)

    def test_constant_samples_have_zero_std(self):
        grid = smolyak_grid(2, 3)
        values = np.tile(np.linspace(0.1, 2.0, 5), (len(grid), 1))
        _, std = weighted_moments(values, grid.nodes, grid.probability_weights)
        np.testing.assert_allclose(std, 0.0, atol=1e-14)

    def test_baseline_on_matching_grid(self, rng):
        grid = smolyak_grid(2, 2)
        values = rng.standard_normal((len(grid), 8))
        x = (np.arange(8) + 0.5) / 8
        mean, std = lf_baseline(values, grid, x, x, periodic=True)
        expected = weighted_moments(values, grid.nodes, grid.probability_weights)
        np.testing.assert_allclose(mean, expected[0], rtol=1e-14)
        np.testing.assert_allclose(std, expected[1], rtol=1e-14)


class TestDeterministicPreset:
    def test_reference_has_no_spread(self):
        preset = deterministic_preset()
        grid = smolyak_grid(1, 2)
        mean, std = reference_statistics(preset, grid, workers=1)
        single = KineticSolver(preset.hf_config()).solve(np.zeros(1), preset.initial)
        np.testing.assert_allclose(mean, single, rtol=1e-13)
        assert std.max() <= 1e-12 * np.abs(mean).max()

    def test_surrogate_reproduces_the_solution(self, caplog):
        report = run_test(deterministic_preset(), workers=1)
        assert report.n == 1
        assert "independent points" in caplog.text
        assert report.e_mean <= 1e-10 * np.linalg.norm(report.mean_ref)
        assert [row.n for row in report.convergence] == [1]
        assert math.isnan(report.convergence[0].Re)

    def test_reference_rejects_wrong_dimension(self):
        experiment = Experiment(deterministic_preset(), workers=1)
        with pytest.raises(ValueError, match="dimension"):
            experiment.reference(smolyak_grid(2, 1))


class TestPipeline:
    def test_report_contents(self, tiny_report):
        report = tiny_report
        assert report.n == 4
        assert report.sparse_nodes == 13
        assert len(report.x) == 20
        assert len(set(report.selected)) == len(report.selected) == 5
        assert np.all(np.diff(report.pivots) <= 1e-12 * report.pivots[0])
        assert [row.n for row in report.convergence] == [1, 2, 3, 4]
        assert [r.k for r in report.diagnostics.records] == [1, 2, 3, 4]
        assert all(0.0 < ratio <= 1.0 for ratio in report.stability.values())
        assert {"candidates", "reference", "selection", "diagnostics"} <= set(report.timings)

    def test_beats_the_low_fidelity_baseline(self, tiny_report):
        assert tiny_report.e_mean < tiny_report.lf_baseline.e_mean
        assert np.isfinite(tiny_report.e_std)

    def test_headline_matches_convergence_row(self, tiny_report):
        last = tiny_report.convergence[-1]
        assert last.e_mean == pytest.approx(tiny_report.e_mean, rel=1e-12)
        assert last.e_std == pytest.approx(tiny_report.e_std, rel=1e-12)

    def test_diagnostics_are_non_negative(self, tiny_report):
        for record in tiny_report.diagnostics.records:
            assert record.true_err_mean >= 0.0
            assert record.Rs_min <= record.Rs_median <= record.Rs_max
            assert record.bound_mean_form <= record.bound

    def test_zero_samples_reports_the_baseline(self):
        report = Experiment(tiny_preset(n=0), workers=1).run()
        assert report.n == 0
        assert report.e_mean == report.lf_baseline.e_mean
        assert [row.n for row in report.convergence] == [0]
        assert report.selected == []

    def test_sweep_matches_run(self, tiny_report):
        frame = convergence_sweep(tiny_preset(), [1, 2, 3, 4], workers=1)
        assert list(frame.columns) == ["n", "e_mean", "e_std", "bound", "Re"]
        np.testing.assert_allclose(frame["e_mean"], [row.e_mean for row in tiny_report.convergence], rtol=1e-12)

    def test_sweep_needs_sizes(self):
        with pytest.raises(ValueError):
            convergence_sweep(tiny_preset(), [])

    def test_too_many_samples(self):
        with pytest.raises(ValueError, match="candidates"):
            Experiment(tiny_preset(candidates=3), workers=1).run(n=4)

    def test_worker_count_does_not_change_results(self, tiny_report, tmp_path):
        parallel = Experiment(tiny_preset(), workers=2).run()
        write_report(tiny_report, str(tmp_path / "serial"))
        write_report(parallel, str(tmp_path / "parallel"))
        for name in ("profiles.csv", "convergence.csv", "diagnostics.csv"):
            assert (tmp_path / "serial" / name).read_bytes() == (tmp_path / "parallel" / name).read_bytes()

    def test_phase_failures_are_wrapped(self, monkeypatch):
        def broken(*args, **kwargs):
            raise RuntimeError("boom")

        monkeypatch.setattr(experiments, "select_points", broken)
        with pytest.raises(PhaseError) as info:
            Experiment(tiny_preset(), workers=1).run()
        assert info.value.phase == "selection"
        assert isinstance(info.value.cause, RuntimeError)

    def test_divergence_is_tagged_with_the_sample(self):
        class Diverging:
            def solve(self, z, initial):
                raise SolverDivergedError("high-fidelity", 7)

        solve = experiments._SampleSolve(Diverging(), tiny_preset().initial)
        with pytest.raises(SolverDivergedError, match="sample 3"):
            solve((3, np.zeros(2)))


class TestReportFiles:
    def test_written_files(self, tiny_report, tmp_path):
        out = str(tmp_path / "report")
        write_report(tiny_report, out, config_echo='{"preset": 0}\n')
        assert sorted(os.listdir(out)) == ["config.echo", "convergence.csv", "diagnostics.csv", "profiles.csv",
                                           "summary.json"]
        profiles = pd.read_csv(os.path.join(out, "profiles.csv"), float_precision="round_trip")
        assert list(profiles.columns) == ["x", "mean_bf", "std_bf", "mean_ref", "std_ref"]
        np.testing.assert_array_equal(profiles["mean_bf"].to_numpy(), tiny_report.mean_bf)
        diagnostics = pd.read_csv(os.path.join(out, "diagnostics.csv"))
        assert list(diagnostics.columns) == ["k", "true_err_mean", "bound", "Rs_median", "Rs_min", "Rs_max", "Re"]
        assert (diagnostics["Rs_min"] <= diagnostics["Rs_median"]).all()
        assert (diagnostics["Rs_median"] <= diagnostics["Rs_max"]).all()
        with open(os.path.join(out, "summary.json")) as f:
            summary = json.load(f)
        assert summary["e_mean"] == tiny_report.e_mean
        assert summary["config_echo"] == '{"preset": 0}\n'


class TestPresetTable:
    @pytest.mark.parametrize("preset_id", [1, 3])
    def test_diffusive_presets_use_the_matching_lf_limit(self, preset_id):
        preset = PRESETS[preset_id]
        assert preset.lf_config().lf_sigma_scale == 3.0
        assert "lf_sigma_scale" in preset.fingerprint("lf")

    @pytest.mark.parametrize("preset_id", [2, 4, 5])
    def test_other_presets_use_the_unscaled_coefficient(self, preset_id):
        assert PRESETS[preset_id].lf_config().lf_sigma_scale == 1.0

    def test_override_wins_over_preset_scale(self):
        assert PRESETS[1].with_overrides(lf_sigma_scale=1.0).lf_sigma_scale == 1.0


def bound_coverage(report) -> float:
    """Share of levels k, up to the first R_e above 10, where the bound is at least the true mean error."""
    levels = []
    for record in sorted(report.diagnostics.records, key=lambda r: r.k):
        if not (math.isfinite(record.Re) and record.Re <= 10.0):
            break
        levels.append(record)
    assert levels, "R_e exceeds 10 already at k = 1"
    return sum(record.bound >= record.true_err_mean for record in levels) / len(levels)


@pytest.fixture(scope="module")
def random_cross_section_report():
    return run_test(PRESETS[1])


@pytest.fixture(scope="module")
def mixed_regime_report():
    return run_test(PRESETS[4])


@pytest.mark.slow
class TestPresetAcceptance:
    def test_random_cross_section(self, random_cross_section_report):
        report = random_cross_section_report
        assert report.e_mean <= 1e-4
        assert report.e_std <= 1e-3
        assert report.e_mean < report.lf_baseline.e_mean

    def test_random_cross_section_kinetic_regime(self):
        assert run_test(PRESETS[1], overrides={"epsilon": 1e-2}).e_mean <= 1e-4

    @pytest.mark.parametrize("report_fixture", ["random_cross_section_report", "mixed_regime_report"])
    def test_bound_covers_true_error(self, report_fixture, request):
        report = request.getfixturevalue(report_fixture)
        assert bound_coverage(report) >= 0.9
        assert report.diagnostics.records[0].Re <= 10.0

    def test_mixed_regime_decay(self, mixed_regime_report):
        e = mixed_regime_report.convergence_frame().set_index("n")["e_mean"]
        assert e[12] <= e[2] / 10

    def test_discontinuous_cross_section(self):
        assert run_test(PRESETS[5]).e_mean <= 1e-3
