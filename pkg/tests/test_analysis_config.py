"""Tests for run configuration loading and validation."""

import json

import pytest

from analysis_config import DEFAULT_TOLERANCES, OutputPaths, RunConfig, Tolerances


class TestTolerances:

    def test_override_returns_copy(self):
        loose = DEFAULT_TOLERANCES.override(check=1e-6)
        assert loose.check == 1e-6
        assert DEFAULT_TOLERANCES.check == 1e-9
        assert loose.bipartite == DEFAULT_TOLERANCES.bipartite

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            Tolerances().override(speed=1.0)

    def test_from_dict(self):
        assert Tolerances.from_dict({"zero": "1e-6"}).zero == 1e-6


class TestRunConfig:

    def test_default_is_valid(self, tmp_path):
        graph = tmp_path / "g.txt"
        graph.write_text("0 1 1\n")
        assert RunConfig.default("energy", str(graph)).validate() == []

    def test_default_leaves_measure_choice_open(self):
        config = RunConfig.default("walk")
        assert config.preset is None
        assert config.measure_path is None
        assert config.steps == 10

    def test_from_json_file(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"command": "gnn", "depth": 128, "tolerances": {"check": 1e-7}}))
        config = RunConfig.from_json_file(str(path))
        assert config.depth == 128
        assert config.tolerances.check == 1e-7
        assert config.width == 16

    def test_unknown_key(self):
        with pytest.raises(ValueError):
            RunConfig.from_dict({"command": "energy", "colour": "red"})

    def test_collects_every_issue(self, tmp_path):
        config = RunConfig(command="smooth", preset="lazy", measure_path=str(tmp_path / "mu.txt"),
                           orders=[-1], times=[1.0, 0.5], arch="sage", tail_fraction=0.0)
        issues = config.validate()
        assert any("Unknown command" in i for i in issues)
        assert any("No graph file" in i for i in issues)
        assert any("mutually exclusive" in i for i in issues)
        assert any("Unknown preset" in i for i in issues)
        assert any("Missing measure file" in i for i in issues)
        assert any("nonnegative" in i for i in issues)
        assert any("strictly increasing" in i for i in issues)
        assert any("architecture" in i for i in issues)
        assert any("tail_fraction" in i for i in issues)

    def test_output_paths(self, tmp_path):
        config = RunConfig(command="gnn", output_path=str(tmp_path / "out" / "gnn.csv"))
        assert config.output.sibling(".json") == str(tmp_path / "out" / "gnn.json")
        assert config.validate()  # no graph file
        assert (tmp_path / "out").is_dir()

    def test_no_output(self):
        assert RunConfig(command="inspect").output is None

    def test_output_base_dir(self, tmp_path):
        paths = OutputPaths(str(tmp_path / "a" / "r.csv"))
        assert paths.base_dir == str(tmp_path / "a")
