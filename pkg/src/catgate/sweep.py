"""Fidelity sweep over qutrit decoherence scale T and cavity decay time kappa^-1."""

import csv
import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path
from queue import Queue
from typing import Any

import psutil
from tqdm import tqdm

from catgate import __version__
from catgate.analysis import export_json, fidelity_average
from catgate.config import RunConfig
from catgate.dynamics import rates_from_T
from catgate.errors import CatgateError
from catgate.models import DecoherenceParams
from catgate.scenario import GateMode
from catgate.workers import TaskOutcome, WorkerPool, default_workers

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "T_us",
    "kappa_inv_us",
    "mean_fidelity",
    "leakage",
    "trace_drift",
    "wall_time_s",
    "config_hash",
)


@dataclass(slots=True, frozen=True)
class SweepCell:
    index: int
    T_us: float
    kappa_inv_us: float


@dataclass(slots=True)
class SweepResult:
    """One (T, kappa^-1) cell; a failed cell has NaN numbers and an error message."""

    T_us: float
    kappa_inv_us: float
    mean_fidelity: float
    leakage: float
    trace_drift: float
    wall_time_s: float
    config_hash: str
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def as_row(self) -> list[str]:
        return [
            repr(self.T_us),
            repr(self.kappa_inv_us),
            repr(self.mean_fidelity),
            repr(self.leakage),
            repr(self.trace_drift),
            repr(self.wall_time_s),
            self.config_hash,
        ]


def sweep_cells(config: RunConfig) -> list[SweepCell]:
    """Cells in row-major order: T outer, kappa^-1 inner."""
    pairs = [(t, k) for t in config.T_values for k in config.kappa_inv_values]
    return [SweepCell(index, t, k) for index, (t, k) in enumerate(pairs)]


def cell_decoherence(T: float, kappa_inv: float) -> DecoherenceParams:
    """Qutrit rates from T plus kappa1 = kappa2 = 1 / kappa_inv."""
    return rates_from_T(T).with_kappa_inv(kappa_inv)


def failed_result(
    config: RunConfig, cell: SweepCell, message: str, wall_time_s: float = 0.0
) -> SweepResult:
    """NaN row for a cell that raised."""
    return SweepResult(
        T_us=cell.T_us,
        kappa_inv_us=cell.kappa_inv_us,
        mean_fidelity=math.nan,
        leakage=math.nan,
        trace_drift=math.nan,
        wall_time_s=wall_time_s if config.output.record_wall_time else 0.0,
        config_hash=config.config_hash,
        error=message,
    )


def evaluate_cell(config: RunConfig, cell: SweepCell, workers: int = 1) -> SweepResult:
    """Average fidelity of one open-system cell; any failure ends up in the row.

    ``workers`` threads share the propagations inside the cell.
    """
    start = time.perf_counter()
    try:
        scenario = config.scenario(
            decoherence=cell_decoherence(cell.T_us, cell.kappa_inv_us),
            mode=GateMode.OPEN,
            workers=workers,
        )
        result = fidelity_average(scenario)
    except CatgateError as exc:
        logger.error("cell T=%g us, kappa^-1=%g us failed: %s", cell.T_us, cell.kappa_inv_us, exc)
        message = f"{type(exc).__name__}: {exc}"
        return failed_result(config, cell, message, time.perf_counter() - start)
    except Exception as exc:
        logger.exception("cell T=%g us, kappa^-1=%g us raised", cell.T_us, cell.kappa_inv_us)
        message = f"{type(exc).__name__}: {exc}"
        return failed_result(config, cell, message, time.perf_counter() - start)
    return SweepResult(
        T_us=cell.T_us,
        kappa_inv_us=cell.kappa_inv_us,
        mean_fidelity=result.mean_fidelity,
        leakage=result.leakage,
        trace_drift=result.trace_drift,
        wall_time_s=_wall_time(config, start),
        config_hash=config.config_hash,
    )


def _wall_time(config: RunConfig, start: float) -> float:
    return time.perf_counter() - start if config.output.record_wall_time else 0.0


class SweepRunner:
    """
    Runs sweep cells on a worker pool.

    Each finished cell is pushed to ``updates`` as it completes so a dashboard
    can follow along; :meth:`results` returns the rows in cell order. When the
    grid has fewer cells than workers, the spare threads go to the
    propagations inside each cell.
    """

    def __init__(
        self,
        config: RunConfig,
        workers: int | None = None,
        updates: Queue[TaskOutcome[SweepResult]] | None = None,
    ) -> None:
        """
        Initialize the runner.

        Args:
            config: Validated run configuration.
            workers: Thread count; CATGATE_THREADS and the config take part as in
                :func:`catgate.workers.default_workers`.
            updates: Queue receiving finished cells. Created when omitted.
        """
        self.config = config
        self.cells = sweep_cells(config)
        total = default_workers(workers if workers is not None else config.workers)
        self.cell_workers = max(1, total // max(1, len(self.cells)))
        self._pool: WorkerPool[SweepCell, SweepResult] = WorkerPool(
            lambda cell: evaluate_cell(config, cell, self.cell_workers),
            self.cells,
            total,
            updates,
        )
        self._started = 0.0
        self._elapsed = 0.0

    @property
    def updates(self) -> Queue[TaskOutcome[SweepResult]]:
        return self._pool.outcomes

    @property
    def workers(self) -> int:
        return self._pool.workers

    @property
    def completed(self) -> int:
        return self._pool.completed

    @property
    def is_running(self) -> bool:
        return self._pool.is_running

    @property
    def elapsed(self) -> float:
        """Wall time of the sweep so far in seconds."""
        if self.is_running:
            return time.perf_counter() - self._started
        return self._elapsed

    def start(self) -> None:
        """Start the worker threads without waiting for them."""
        if self.is_running:
            return
        logger.info(
            "sweeping %d cells on %d workers, %d per cell (config hash %s)",
            len(self.cells),
            self.workers,
            self.cell_workers,
            self.config.config_hash,
        )
        self._started = time.perf_counter()
        self._pool.start()

    def stop(self, timeout: float | None = 5.0) -> None:
        self._pool.stop(timeout)
        self._elapsed = time.perf_counter() - self._started

    def wait(self, progress: bool = False) -> list[SweepResult]:
        """Block until every cell is done, optionally with a progress bar."""
        if progress:
            with tqdm(total=len(self.cells), desc="sweep", unit="cell") as bar:
                while bar.n < len(self.cells):
                    self.updates.get()
                    bar.update(1)
        self._pool.join()
        self._elapsed = time.perf_counter() - self._started
        return self.results()

    def row(self, outcome: TaskOutcome[SweepResult]) -> SweepResult:
        """The row of a finished cell; a NaN row when its task raised."""
        if outcome.value is not None:
            return outcome.value
        cell = self.cells[outcome.index]
        message = outcome.error or "no result"
        return failed_result(self.config, cell, message, outcome.wall_time_s)

    def results(self) -> list[SweepResult]:
        """Finished rows in cell order."""
        return [self.row(outcome) for outcome in self._pool.collect()]

    def run(self, progress: bool = False) -> list[SweepResult]:
        self.start()
        return self.wait(progress)


def run_sweep(
    config: RunConfig, workers: int | None = None, progress: bool = False
) -> list[SweepResult]:
    """Evaluate every (T, kappa^-1) cell of the configured grid."""
    return SweepRunner(config, workers).run(progress)


def write_sweep_csv(results: list[SweepResult], path: Path | str) -> Path:
    """CSV with a header row, UTF-8 and LF line endings."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for result in results:
            writer.writerow(result.as_row())
    return target


def write_manifest(
    config: RunConfig,
    results: list[SweepResult],
    path: Path | str,
    workers: int,
    wall_time_s: float,
) -> Path:
    """JSON record of a sweep: config and hash, environment and per-cell errors."""
    payload: dict[str, Any] = {
        "package_version": __version__,
        "config_hash": config.config_hash,
        "config": config.resolved,
        "workers": workers,
        "cells": len(results),
        "failed_cells": [
            {"T_us": r.T_us, "kappa_inv_us": r.kappa_inv_us, "error": r.error}
            for r in results
            if not r.ok
        ],
        "wall_time_s": wall_time_s if config.output.record_wall_time else 0.0,
        "rss_bytes": psutil.Process().memory_info().rss,
    }
    return export_json(payload, path)
