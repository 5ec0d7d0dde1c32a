"""
A small pool of worker threads running independent checks.
"""

# Copyright (C) 2022 The CommCSL Team

import logging
import threading
from abc import ABC, abstractmethod
from queue import Queue
from types import TracebackType
from typing import Callable, Generic, Iterable, List, Optional, Type
from typing import TypeVar

from . import errors as e

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class Task(ABC):
    """A task to be performed by a worker."""

    @abstractmethod
    def run(self) -> None:
        ...


class StopWorker(Task):
    """Signal a worker to terminate."""

    def run(self) -> None:
        pass


class _Job(Task, Generic[T, R]):
    """Compute one item of a `WorkerPool.map()` call."""

    def __init__(
        self,
        fn: Callable[[T], R],
        item: T,
        index: int,
        batch: "_Batch[R]",
    ):
        self.fn = fn
        self.item = item
        self.index = index
        self.batch = batch

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} {self.index}>"

    def run(self) -> None:
        try:
            rv = self.fn(self.item)
        except BaseException as ex:
            self.batch.done(self.index, None, ex)
        else:
            self.batch.done(self.index, rv, None)


class _Batch(Generic[R]):
    def __init__(self, size: int):
        self.results: List[Optional[R]] = [None] * size
        self.errors: List[Optional[BaseException]] = [None] * size
        self._pending = size
        self._cond = threading.Condition()

    def done(
        self, index: int, rv: Optional[R], ex: Optional[BaseException]
    ) -> None:
        with self._cond:
            self.results[index] = rv
            self.errors[index] = ex
            self._pending -= 1
            if not self._pending:
                self._cond.notify_all()

    def wait(self) -> None:
        with self._cond:
            while self._pending:
                self._cond.wait()


class WorkerPool:
    """
    Run functions over lists of items on *num_workers* threads.

    Results are returned in submission order, so the output doesn't depend on
    the number of workers. With a single worker the items are processed in
    the calling thread.
    """

    def __init__(self, num_workers: int = 1, name: str = "commcsl"):
        if num_workers < 1:
            raise e.InterfaceError("the number of workers must be at least 1")
        self.num_workers = num_workers
        self.name = name
        self._tasks: "Queue[Task]" = Queue()
        self._workers: List[threading.Thread] = []
        self._closed = False

    def __repr__(self) -> str:
        return (
            f"<{self.__class__.__name__} {self.name!r}"
            f" workers={self.num_workers}>"
        )

    def __enter__(self) -> "WorkerPool":
        return self

    def __exit__(
        self,
        exc_type: Optional[Type[BaseException]],
        exc_val: Optional[BaseException],
        exc_tb: Optional[TracebackType],
    ) -> None:
        self.close()

    def _start(self) -> None:
        if self._workers or self.num_workers == 1:
            return
        for i in range(self.num_workers):
            t = threading.Thread(
                target=self.worker,
                args=(self._tasks,),
                name=f"{self.name}-worker-{i}",
                daemon=True,
            )
            self._workers.append(t)
            t.start()

    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
        """
        Return ``[fn(item) for item in items]``, computed by the workers.

        If any call raises an exception, the one of the first item in
        submission order is raised again.
        """
        if self._closed:
            raise e.InterfaceError("the worker pool is closed")
        items = list(items)
        if self.num_workers == 1 or len(items) <= 1:
            return [fn(item) for item in items]

        self._start()
        batch: _Batch[R] = _Batch(len(items))
        for i, item in enumerate(items):
            self._tasks.put(_Job(fn, item, i, batch))
        batch.wait()
        for ex in batch.errors:
            if ex is not None:
                raise ex
        return batch.results  # type: ignore[return-value]

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        for i in range(len(self._workers)):
            self._tasks.put(StopWorker())
        for t in self._workers:
            t.join()
        self._workers.clear()

    @classmethod
    def worker(cls, q: "Queue[Task]") -> None:
        """Runner to execute pending tasks.

        The function is designed to run as a separate thread.

        Block on the queue *q*, run a task received. Finish running if a
        StopWorker is received.
        """
        while True:
            task = q.get()

            if isinstance(task, StopWorker):
                logger.debug(
                    "terminating working thread %s",
                    threading.current_thread().name,
                )
                return

            task.run()


def map_ordered(
    fn: Callable[[T], R], items: Iterable[T], workers: int = 1
) -> List[R]:
    """Map *fn* on *items* using a temporary `WorkerPool`."""
    with WorkerPool(workers) as pool:
        return pool.map(fn, items)
