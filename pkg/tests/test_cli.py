"""Tests for the command-line interface."""

import argparse
import csv
import json

import pytest

from catgate.cli import (
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_USAGE,
    main,
    parse_grid,
    parse_values,
    sweep_axes,
)
from catgate.config import default_config
from catgate.errors import ConfigError

SMALL = {"system": {"n1_trunc": 2, "n2_trunc": 10}}

FAILING = {
    "system": {"n1_trunc": 2, "n2_trunc": 10},
    "design": {"model": "interaction", "ramp_ns": 0.0},
    "decoherence": {"T_us": [5.0], "kappa_inv_us": [10.0, 50.0]},
    "simulation": {"t_final": 20.0, "dt": 1.0},
    "analysis": {"quadrature_n": 2},
}


def write_config(directory, data):
    path = directory / "config.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


class TestArgumentTypes:
    """Tests for argument parsers."""

    def test_parse_values(self):
        """Test comma lists with inf."""
        assert parse_values("5,10,inf") == [5.0, 10.0, float("inf")]

    @pytest.mark.parametrize("text", ["", "a,b", "5,-1", "0", "nan"])
    def test_parse_values_invalid(self, text):
        """Test empty, non-numeric and non-positive lists are rejected."""
        with pytest.raises(argparse.ArgumentTypeError):
            parse_values(text)

    def test_parse_grid(self):
        """Test AxB grids."""
        assert parse_grid("3x4") == (3, 4)
        assert parse_grid("2X1") == (2, 1)

    @pytest.mark.parametrize("text", ["3", "3x", "0x2", "axb"])
    def test_parse_grid_invalid(self, text):
        """Test malformed grids are rejected."""
        with pytest.raises(argparse.ArgumentTypeError):
            parse_grid(text)


class TestSweepAxes:
    """Tests for fitting the sweep axes to a grid."""

    def test_linspace_between_config_bounds(self):
        """Test missing axes are spread evenly over the configured range."""
        args = argparse.Namespace(T=None, kappa_inv=None, grid=(2, 3))
        t_values, k_values = sweep_axes(args, default_config())
        assert t_values == pytest.approx([5.0, 15.0])
        assert k_values == pytest.approx([10.0, 155.0, 300.0])

    def test_no_grid(self):
        """Test the config axes are used as they are."""
        args = argparse.Namespace(T=[7.0], kappa_inv=None, grid=None)
        t_values, k_values = sweep_axes(args, default_config())
        assert t_values == [7.0]
        assert k_values == [10.0, 50.0, 136.0, 300.0]

    def test_explicit_list_must_match(self):
        """Test a given list that disagrees with the grid is an error."""
        args = argparse.Namespace(T=[1.0, 2.0], kappa_inv=None, grid=(3, 1))
        with pytest.raises(ConfigError) as info:
            sweep_axes(args, default_config())
        assert info.value.key == "--T"


class TestMain:
    """Tests for the catgate command."""

    def test_version(self, capsys):
        """Test --version exits cleanly."""
        assert main(["--version"]) == EXIT_OK
        assert "catgate" in capsys.readouterr().out

    def test_unknown_command(self):
        """Test a bad command is a usage error."""
        assert main(["launch"]) == EXIT_USAGE

    def test_missing_config(self, tmp_path):
        """Test a missing config file is a usage error."""
        assert main(["design", "--config", str(tmp_path / "absent.json")]) == EXIT_USAGE

    def test_design(self, capsys, tmp_path):
        """Test the design report and its JSON."""
        out = tmp_path / "design.json"
        assert main(["design", "--json", str(out)]) == EXIT_OK
        text = capsys.readouterr().out
        assert "t_gate" in text
        assert "eta/chi           = 12.0000" in text
        assert "coupling ramp     = 20 ns" in text
        assert "run time" in text
        payload = json.loads(out.read_text(encoding="utf-8"))
        assert payload["derived"]["k"] == 6

    def test_truth_table(self, capsys, tmp_path):
        """Test the closed-form truth table."""
        config = write_config(tmp_path, SMALL)
        assert main(["truth-table", "--config", config]) == EXIT_OK
        text = capsys.readouterr().out
        assert "conditional phase" in text
        assert "entangled-state overlap" in text

    def test_simulate(self, capsys, tmp_path):
        """Test one closed-form run with JSON and trajectory output."""
        config = write_config(tmp_path, SMALL)
        out = tmp_path / "run.json"
        trajectory = tmp_path / "trajectory.csv"
        argv = [
            "simulate",
            "--config",
            config,
            "--mode",
            "closed-form",
            "--json",
            str(out),
            "--dump-trajectory",
            str(trajectory),
        ]
        assert main(argv) == EXIT_OK
        assert "fidelity (sqrt)" in capsys.readouterr().out
        payload = json.loads(out.read_text(encoding="utf-8"))
        assert payload["fidelity"] == pytest.approx(1.0, abs=1e-9)
        with trajectory.open(encoding="utf-8", newline="") as handle:
            rows = list(csv.reader(handle))
        assert len(rows) == 3

    def test_converge_truncation_failure(self, capsys, tmp_path):
        """Test a too-small truncation fails the convergence check with the numerical exit code."""
        config = write_config(tmp_path, {"system": {"n1_trunc": 2, "n2_trunc": 8}})
        assert main(["converge", "--config", config, "--mode", "closed-form"]) == EXIT_NUMERICAL
        assert "FAILED: truncation" in capsys.readouterr().out

    def test_sweep_with_failures(self, tmp_path):
        """Test failed cells give exit code 2 and still write both files."""
        config = write_config(tmp_path, FAILING)
        out = tmp_path / "results" / "grid.csv"
        argv = ["-q", "sweep", "--config", config, "--out", str(out), "--no-timing"]
        assert main(argv) == EXIT_NUMERICAL
        with out.open(encoding="utf-8", newline="") as handle:
            rows = list(csv.reader(handle))
        assert len(rows) == 3
        assert rows[1][5] == "0.0"
        manifest = json.loads(out.with_suffix(".json").read_text(encoding="utf-8"))
        assert len(manifest["failed_cells"]) == 2
        assert manifest["wall_time_s"] == 0.0
