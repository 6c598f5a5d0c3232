"""Live Textual dashboard for a running fidelity sweep."""

import math
from queue import Empty

import psutil
from textual.app import App, ComposeResult
from textual.containers import Container
from textual.widgets import DataTable, Footer, Static

from catgate.sweep import SweepResult, SweepRunner
from catgate.workers import TaskOutcome


BYTE_UNITS = ("B", "KiB", "MiB", "GiB", "TiB", "PiB")


def format_bytes(size: float) -> str:
    """Memory size in binary units, e.g. ``412.0 MiB``."""
    whole = max(0, int(size))
    exponent = min((whole.bit_length() - 1) // 10, len(BYTE_UNITS) - 1) if whole else 0
    if exponent == 0:
        return f"{whole} B"
    return f"{size / 1024**exponent:.1f} {BYTE_UNITS[exponent]}"


def format_value(value: float, spec: str) -> str:
    return "-" if math.isnan(value) else format(value, spec)


class SweepHeader(Static):
    """Header line with progress, elapsed time and memory use."""

    DEFAULT_CSS = """
    SweepHeader {
        height: auto;
        padding: 1;
        background: $surface;
    }
    """

    def show(self, runner: SweepRunner) -> None:
        done, total = runner.completed, len(runner.cells)
        bar_len = int(20 * done / total) if total else 20
        bar = "[green]█[/green]" * bar_len + "[dim]░[/dim]" * (20 - bar_len)
        rss = psutil.Process().memory_info().rss
        # Escape opening bracket for Textual markup
        self.update(
            "Cells " + "\\[" + bar + f"] {done}/{total}   "
            f"workers {runner.workers}   elapsed {runner.elapsed:7.1f}s   "
            f"RSS {format_bytes(rss)}   config {runner.config.config_hash}"
        )


class CellTable(Container):
    """One row per sweep cell, filled in as cells finish."""

    DEFAULT_CSS = """
    CellTable {
        height: 1fr;
        border: solid $primary;
    }
    """

    def __init__(self, runner: SweepRunner, *args, **kwargs) -> None:
        super().__init__(*args, **kwargs)
        self._runner = runner

    def compose(self) -> ComposeResult:
        yield DataTable(id="cell-table")

    def on_mount(self) -> None:
        table = self.query_one("#cell-table", DataTable)
        table.cursor_type = "row"
        table.add_column("T (us)", key="T", width=8)
        table.add_column("1/kappa (us)", key="kappa_inv", width=13)
        table.add_column("Fidelity", key="fidelity", width=12)
        table.add_column("Leakage", key="leakage", width=10)
        table.add_column("Drift", key="drift", width=10)
        table.add_column("Time (s)", key="time", width=9)
        table.add_column("Status", key="status")
        for cell in self._runner.cells:
            table.add_row(
                f"{cell.T_us:g}",
                f"{cell.kappa_inv_us:g}",
                "-",
                "-",
                "-",
                "-",
                "queued",
                key=str(cell.index),
            )

    def show_result(self, index: int, result: SweepResult) -> None:
        """Fill a finished row using update_cell."""
        table = self.query_one("#cell-table", DataTable)
        row_key = str(index)
        try:
            table.update_cell(row_key, "fidelity", format_value(result.mean_fidelity, ".6f"))
            table.update_cell(row_key, "leakage", format_value(result.leakage, ".2e"))
            table.update_cell(row_key, "drift", format_value(result.trace_drift, ".1e"))
            table.update_cell(row_key, "time", f"{result.wall_time_s:.1f}")
            table.update_cell(row_key, "status", "done" if result.ok else f"failed: {result.error}")
        except Exception:
            pass  # Row may not exist


class SweepApp(App):
    """Dashboard that runs a sweep and shows each cell as it finishes."""

    TITLE = "catgate"
    SUB_TITLE = "Gate fidelity sweep"

    CSS = """
    Screen {
        layout: vertical;
    }

    #sweep-header {
        dock: top;
        height: auto;
    }
    """

    BINDINGS = [
        ("q", "quit", "Quit"),
    ]

    def __init__(self, runner: SweepRunner) -> None:
        super().__init__()
        self.runner = runner
        self._announced = False

    def compose(self) -> ComposeResult:
        yield SweepHeader(id="sweep-header")
        yield CellTable(self.runner)
        yield Footer()

    def on_mount(self) -> None:
        """Start the sweep when the app is mounted."""
        self.runner.start()
        self.set_interval(0.5, self._check_for_updates)

    def _check_for_updates(self) -> None:
        """Drain finished cells from the runner queue into the table."""
        outcomes: list[TaskOutcome[SweepResult]] = []
        while True:
            try:
                outcomes.append(self.runner.updates.get_nowait())
            except Empty:
                break
        try:
            table = self.query_one(CellTable)
            for outcome in outcomes:
                table.show_result(outcome.index, self.runner.row(outcome))
            self.query_one("#sweep-header", SweepHeader).show(self.runner)
        except Exception:
            pass  # the dashboard must never take the sweep down
        if not self._announced and self.runner.completed == len(self.runner.cells):
            self._announced = True
            self.notify("Sweep finished")

    def action_quit(self) -> None:
        """Stop taking new cells and leave."""
        self.runner.stop(timeout=0.1)
        self.exit()
