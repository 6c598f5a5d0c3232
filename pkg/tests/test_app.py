"""Tests for the sweep dashboard."""

import math

import pytest
from textual.widgets import DataTable

from catgate.app import CellTable, SweepApp, format_bytes, format_value
from catgate.config import load_config
from catgate.sweep import SweepResult, SweepRunner

# Every cell fails at once on an oversized step, which keeps the app tests quick.
FAILING = {
    "system": {"n1_trunc": 2, "n2_trunc": 10},
    "design": {"model": "interaction", "ramp_ns": 0.0},
    "decoherence": {"T_us": [5.0, 10.0], "kappa_inv_us": [10.0, 50.0]},
    "simulation": {"t_final": 20.0, "dt": 1.0},
    "analysis": {"quadrature_n": 2},
}


@pytest.fixture
def runner():
    return SweepRunner(load_config(FAILING), workers=2)


def test_format_bytes_bytes():
    """Test sizes below one KiB print as whole bytes."""
    assert format_bytes(0) == "0 B"
    assert format_bytes(500) == "500 B"
    assert format_bytes(1023.9) == "1023 B"


def test_format_bytes_binary_units():
    """Test larger sizes switch unit at every power of 1024."""
    assert format_bytes(1024) == "1.0 KiB"
    assert format_bytes(5242880) == "5.0 MiB"
    assert format_bytes(1536 * 1024**3) == "1.5 TiB"
    assert format_bytes(2048 * 1024**5) == "2048.0 PiB"


def test_format_value():
    """Test NaN prints as a dash."""
    assert format_value(math.nan, ".6f") == "-"
    assert format_value(0.5, ".2f") == "0.50"


@pytest.mark.asyncio
async def test_app_creation(runner):
    """Test SweepApp can be instantiated."""
    app = SweepApp(runner)
    assert app.title == "catgate"
    assert app.runner is runner


@pytest.mark.asyncio
async def test_app_compose(runner):
    """Test the header and one queued row per cell."""
    app = SweepApp(runner)
    async with app.run_test() as pilot:
        assert pilot.app.query_one("#sweep-header") is not None
        table = pilot.app.query_one("#cell-table", DataTable)
        assert table.row_count == 4
        assert table.get_cell("3", "T") == "10"
        assert table.get_cell("3", "kappa_inv") == "50"


@pytest.mark.asyncio
async def test_failed_cells_shown(runner):
    """Test finished cells replace the queued status."""
    app = SweepApp(runner)
    async with app.run_test() as pilot:
        runner.wait()
        pilot.app._check_for_updates()
        table = pilot.app.query_one("#cell-table", DataTable)
        for index in range(4):
            status = table.get_cell(str(index), "status")
            assert status.startswith("failed: StepSizeError")
            assert table.get_cell(str(index), "fidelity") == "-"
        assert runner.updates.empty()


@pytest.mark.asyncio
async def test_show_result(runner):
    """Test a successful row is formatted in place."""
    app = SweepApp(runner)
    async with app.run_test() as pilot:
        cells = pilot.app.query_one(CellTable)
        result = SweepResult(
            T_us=5.0,
            kappa_inv_us=10.0,
            mean_fidelity=0.987654321,
            leakage=1.5e-3,
            trace_drift=2e-12,
            wall_time_s=3.25,
            config_hash="0123456789abcdef",
        )
        cells.show_result(0, result)
        table = pilot.app.query_one("#cell-table", DataTable)
        assert table.get_cell("0", "fidelity") == "0.987654"
        assert table.get_cell("0", "leakage") == "1.50e-03"
        assert table.get_cell("0", "status") == "done"


@pytest.mark.asyncio
async def test_app_quit_binding(runner):
    """Test that 'q' binding stops the sweep and quits."""
    app = SweepApp(runner)
    async with app.run_test() as pilot:
        await pilot.press("q")
        assert pilot.app._exit
