import contextvars
import logging
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

LOG = logging.getLogger("surveyfda")

T = TypeVar("T")
R = TypeVar("R")


def map_in_threads(
    func: Callable[[T], R],
    items: Iterable[T],
    threads: int = 1,
    name: str = "surveyfda-worker",
) -> list[R]:
    """Apply ``func`` to every item, returning results in input order.

    With more than one thread, each task runs inside a copy of the caller's
    context, so tasks are considered as belonging to whatever command
    spawned them (this mainly influences logging). Results never depend on
    the thread count as long as each item carries its own random stream.

    The first exception raised by any task, in input order, propagates.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    LOG.debug(
        "Running %d tasks on %d threads",
        len(items),
        threads,
        extra={"event": "pool"},
    )
    with ThreadPoolExecutor(
        max_workers=threads, thread_name_prefix=name
    ) as pool:
        futures = [
            pool.submit(contextvars.copy_context().run, func, item)
            for item in items
        ]
        return [future.result() for future in futures]
