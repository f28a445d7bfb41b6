import logging
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

T = TypeVar("T")
R = TypeVar("R")

logger = logging.getLogger(__name__)


def parallel_map(fn: Callable[[T], R], items: Iterable[T], jobs: int = 1, threads: bool = False) -> List[R]:
    """
    Ordered map over ``items`` with up to ``jobs`` workers.

    Results come back in input order whatever the worker count. Process workers
    need ``fn`` to be picklable (a module-level function or a functools.partial of one).
    """
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    executor_cls = ThreadPoolExecutor if threads else ProcessPoolExecutor
    logger.debug("Mapping %d items over %d %s workers", len(items), jobs, "thread" if threads else "process")
    with executor_cls(max_workers=jobs) as executor:
        return list(executor.map(fn, items))
