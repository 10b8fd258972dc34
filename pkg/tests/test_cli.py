"""Config parsing, canonical echo and the command-line entry point."""
import json
import os

import pandas as pd
import pytest

import bifi.cli as cli
from bifi.cli import main, parse_config
from bifi.errors import ConfigError, SolverDivergedError
from bifi.models.run_config import RunConfig
from bifi.solvers import KineticSolver
from bifi.utils.cache import SnapshotCache
from tests.conftest import tiny_preset

GOLDEN = os.path.join(os.path.dirname(__file__), "golden")


def write_config(tmp_path, data, name="config.json") -> str:
    path = tmp_path / name
    path.write_text(data if isinstance(data, str) else json.dumps(data, indent=2))
    return str(path)


@pytest.fixture
def tiny_config(tmp_path):
    return write_config(tmp_path, {
        "custom": tiny_preset().model_dump(mode="json"),
        "workers": 1,
        "out": str(tmp_path / "out"),
    })


class TestParseConfig:
    def test_flags_only(self):
        config = parse_config(overrides={"command": "run-test", "preset": 1, "epsilon": 1e-8, "n": 12})
        preset = config.resolve_preset()
        assert preset.id == 1
        assert preset.epsilon.kind == "constant" and preset.epsilon.value == 1e-8
        assert preset.n == 12

    def test_golden_canonical_form(self):
        config = parse_config(os.path.join(GOLDEN, "run_test_preset1.json"))
        with open(os.path.join(GOLDEN, "run_test_preset1.canonical.json")) as f:
            expected = json.load(f)
        text = config.canonical_json()
        assert text.endswith("}\n")
        assert json.loads(text) == expected
        assert list(json.loads(text)) == sorted(expected)

    def test_canonical_form_round_trips(self, tmp_path):
        config = parse_config(overrides={"command": "sweep", "preset": 4, "n_list": [2, 4, 8], "workers": 3})
        assert RunConfig.model_validate_json(config.canonical_json()) == config
        again = parse_config(write_config(tmp_path, config.canonical_json()))
        assert again.canonical_json() == config.canonical_json()

    def test_invalid_value_reports_key_and_line(self, tmp_path):
        path = write_config(tmp_path, '{\n  "command": "run-test",\n  "preset": 2,\n  "n": -1\n}\n')
        with pytest.raises(ConfigError) as info:
            parse_config(path)
        assert info.value.key == "n"
        assert info.value.line == 4
        assert "line 4" in str(info.value)

    def test_unknown_key(self, tmp_path):
        path = write_config(tmp_path, '{\n  "preset": 2,\n  "candidate": 10\n}\n')
        with pytest.raises(ConfigError) as info:
            parse_config(path)
        assert info.value.key == "candidate"
        assert info.value.line == 3

    def test_nested_key(self, tmp_path):
        text = '{\n  "custom": {\n    "hf": {\n      "cells": 1,\n      "dt": 1e-4\n    }\n  }\n}\n'
        with pytest.raises(ConfigError) as info:
            parse_config(write_config(tmp_path, text))
        assert info.value.key == "custom.hf.cells"
        assert info.value.line == 4

    def test_malformed_json(self, tmp_path):
        with pytest.raises(ConfigError) as info:
            parse_config(write_config(tmp_path, '{\n  "preset": 1,\n}\n'))
        assert info.value.line == 3

    def test_flag_overrides_file(self, tmp_path):
        path = write_config(tmp_path, {"preset": 2, "n": 5})
        assert parse_config(path, {"n": 7}).n == 7

    def test_invalid_flag_has_no_line(self, tmp_path):
        path = write_config(tmp_path, {"preset": 2, "n": 5})
        with pytest.raises(ConfigError) as info:
            parse_config(path, {"n": -2})
        assert info.value.key == "n"
        assert info.value.line is None

    def test_preset_and_custom_are_exclusive(self):
        with pytest.raises(ConfigError, match="exactly one"):
            parse_config(overrides={"preset": 1, "custom": {}})

    def test_parameter_length_must_match(self):
        with pytest.raises(ConfigError, match="dimension"):
            parse_config(overrides={"command": "solve-hf", "preset": 1, "z": [0.1, 0.2]})

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            parse_config(str(tmp_path / "absent.json"))


class TestMain:
    def test_selftest(self, capsys):
        assert main(["selftest"]) == 0
        passed, total = capsys.readouterr().out.split()[0].split("/")
        assert passed == total

    def test_print_config(self, capsys):
        assert main(["run-test", "--preset", "1", "--epsilon", "1e-8", "--n", "12", "--print-config"]) == 0
        with open(os.path.join(GOLDEN, "run_test_preset1.canonical.json")) as f:
            assert json.loads(capsys.readouterr().out) == json.load(f)

    @pytest.mark.parametrize("argv", [
        ["run-test"],
        ["bogus"],
        ["solve-lf", "--preset", "1", "--z", "0.1,0.2"],
        ["solve-lf", "--preset", "1", "--z", "a,b"],
        ["run-test", "--preset", "9"],
    ])
    def test_usage_errors(self, argv):
        assert main(argv) == 2

    def test_solve_hf(self, tmp_path):
        out = str(tmp_path / "hf")
        assert main(["solve-hf", "--preset", "1", "--out", out]) == 0
        frame = pd.read_csv(os.path.join(out, "hf.csv"))
        assert list(frame.columns) == ["x", "rbar"]
        assert len(frame) == 40
        assert os.path.exists(os.path.join(out, "config.echo"))

    def test_solve_lf_at_parameter(self, tmp_path):
        out = str(tmp_path / "lf")
        assert main(["solve-lf", "--preset", "3", "--z", "0.5,0,0,0,-0.5", "--out", out]) == 0
        frame = pd.read_csv(os.path.join(out, "lf.csv"))
        assert list(frame.columns) == ["x", "rho"]
        assert len(frame) == 25

    def test_divergence_exit_code(self, tmp_path, monkeypatch):
        def diverge(self, z, preset):
            raise SolverDivergedError(self.name, 3)

        monkeypatch.setattr(KineticSolver, "solve", diverge)
        assert main(["solve-hf", "--preset", "1", "--out", str(tmp_path)]) == 1

    def test_unexpected_error_exit_code(self, monkeypatch):
        def broken(config):
            raise RuntimeError("boom")

        monkeypatch.setattr(cli, "run", broken)
        assert main(["run-test", "--preset", "1"]) == 1

    def test_run_test_writes_report(self, tiny_config, tmp_path):
        assert main(["run-test", tiny_config]) == 0
        out = tmp_path / "out"
        for name in ("config.echo", "profiles.csv", "convergence.csv", "diagnostics.csv", "summary.json"):
            assert (out / name).exists()
        echo = json.loads((out / "config.echo").read_text())
        assert echo["command"] == "run-test"
        assert echo["custom"]["name"] == "tiny"

    def test_sweep(self, tiny_config, tmp_path):
        assert main(["sweep", tiny_config, "--n-list", "1,2,3"]) == 0
        frame = pd.read_csv(tmp_path / "out" / "convergence.csv")
        assert frame["n"].tolist() == [1, 2, 3]

    def test_reference_with_cache(self, tiny_config, tmp_path):
        cache = str(tmp_path / "snapshots.db")
        assert main(["reference", tiny_config, "--cache", cache]) == 0
        stored = SnapshotCache(cache).count()
        assert stored == 13
        grid = pd.read_csv(tmp_path / "out" / "sparse_grid.csv")
        assert list(grid.columns) == ["z1", "z2", "weight"]
        first = (tmp_path / "out" / "reference.csv").read_bytes()
        assert main(["reference", tiny_config, "--cache", cache]) == 0
        assert SnapshotCache(cache).count() == stored
        assert (tmp_path / "out" / "reference.csv").read_bytes() == first
