"""Thread pool for independent propagations with an index-ordered merge."""

import logging
import os
import threading
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from queue import Empty, Queue

import psutil

from catgate.errors import CatgateError, ConfigError

logger = logging.getLogger(__name__)

THREADS_ENV = "CATGATE_THREADS"


@dataclass(slots=True)
class TaskOutcome[R]:
    """Result of one task; ``error`` holds the message of a failed task."""

    index: int
    value: R | None
    error: str | None
    wall_time_s: float

    @property
    def ok(self) -> bool:
        return self.error is None


def default_workers(requested: int | None = None) -> int:
    """Worker count: CATGATE_THREADS, then ``requested``, then physical cores."""
    env = os.environ.get(THREADS_ENV)
    if env is not None:
        try:
            value = int(env)
        except ValueError as exc:
            raise ConfigError(f"must be a positive integer, got {env!r}", key=THREADS_ENV) from exc
        if value < 1:
            raise ConfigError(f"must be a positive integer, got {value}", key=THREADS_ENV)
        return value
    if requested is not None:
        if requested < 1:
            raise ConfigError(f"must be >= 1, got {requested}", key="parallel.workers")
        return requested
    return psutil.cpu_count(logical=False) or 1


class WorkerPool[T, R]:
    """
    Runs a function over a list of items on daemon threads.

    Finished tasks are pushed to ``outcomes`` as they complete, so a UI can
    follow progress; :meth:`collect` returns them ordered by task index.
    Domain errors are caught per task and recorded; the other tasks continue.
    """

    def __init__(
        self,
        func: Callable[[T], R],
        items: Sequence[T],
        workers: int = 1,
        outcomes: Queue[TaskOutcome[R]] | None = None,
    ) -> None:
        """
        Initialize the pool.

        Args:
            func: Function applied to every item.
            items: Task inputs; the position of an item is its task index.
            workers: Number of threads.
            outcomes: Queue receiving each finished task. Created when omitted.
        """
        if workers < 1:
            raise ConfigError(f"must be >= 1, got {workers}", key="parallel.workers")
        self._func = func
        self._items = list(items)
        self._workers = min(workers, max(1, len(self._items)))
        self.outcomes: Queue[TaskOutcome[R]] = outcomes if outcomes is not None else Queue()
        self._tasks: Queue[int] = Queue()
        self._stop_event = threading.Event()
        self._threads: list[threading.Thread] = []
        self._finished: dict[int, TaskOutcome[R]] = {}
        self._lock = threading.Lock()

    @property
    def workers(self) -> int:
        return self._workers

    @property
    def total(self) -> int:
        return len(self._items)

    @property
    def completed(self) -> int:
        with self._lock:
            return len(self._finished)

    @property
    def is_running(self) -> bool:
        return any(thread.is_alive() for thread in self._threads)

    def start(self) -> None:
        """Queue every task and start the worker threads."""
        if self.is_running:
            return
        self._stop_event.clear()
        for index in range(len(self._items)):
            if index not in self._finished:
                self._tasks.put(index)
        self._threads = [
            threading.Thread(target=self._work_loop, daemon=True, name=f"catgate-worker-{n}")
            for n in range(self._workers)
        ]
        for thread in self._threads:
            thread.start()

    def stop(self, timeout: float | None = 5.0) -> None:
        """Stop taking new tasks; running tasks finish first."""
        self._stop_event.set()
        for thread in self._threads:
            thread.join(timeout=timeout)
        self._threads = []

    def join(self) -> None:
        for thread in self._threads:
            thread.join()

    def collect(self) -> list[TaskOutcome[R]]:
        """Finished outcomes ordered by task index."""
        with self._lock:
            return [self._finished[index] for index in sorted(self._finished)]

    def run(self) -> list[TaskOutcome[R]]:
        """Run every task to completion and return the ordered outcomes."""
        self.start()
        self.join()
        return self.collect()

    def _work_loop(self) -> None:
        while not self._stop_event.is_set():
            try:
                index = self._tasks.get_nowait()
            except Empty:
                return
            outcome = self._run_one(index)
            with self._lock:
                self._finished[index] = outcome
            self.outcomes.put(outcome)

    def _run_one(self, index: int) -> TaskOutcome[R]:
        start = time.perf_counter()
        try:
            value = self._func(self._items[index])
        except CatgateError as exc:
            logger.error("task %d failed: %s", index, exc)
            message = f"{type(exc).__name__}: {exc}"
            return TaskOutcome(index, None, message, time.perf_counter() - start)
        except Exception as exc:
            # every task must produce an outcome
            logger.exception("task %d raised an unexpected error", index)
            message = f"{type(exc).__name__}: {exc}"
            return TaskOutcome(index, None, message, time.perf_counter() - start)
        return TaskOutcome(index, value, None, time.perf_counter() - start)


def map_ordered[T, R](func: Callable[[T], R], items: Sequence[T], workers: int = 1) -> list[R]:
    """Apply ``func`` to every item, raising the first failure in index order."""
    if workers == 1:
        return [func(item) for item in items]
    results: list[R] = []
    errors: dict[int, Exception] = {}

    def guarded(pair: tuple[int, T]) -> R | None:
        try:
            return func(pair[1])
        except Exception as exc:  # re-raised below in index order
            errors[pair[0]] = exc
            return None

    outcomes = WorkerPool(guarded, list(enumerate(items)), workers).run()
    if errors:
        raise errors[min(errors)]
    for outcome in outcomes:
        results.append(outcome.value)  # type: ignore[arg-type]
    return results
