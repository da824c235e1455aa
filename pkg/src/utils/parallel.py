import contextvars
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, Tuple, TypeVar

from ..config.settings import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")


def set_max_workers(n: int) -> None:
    """Cap worker threads for the rest of the process (the CLI's --threads)."""
    if n < 1:
        raise ValueError("worker count must be >= 1")
    settings.MAX_WORKERS = n


def chunk_ranges(total: int, chunk_size: int) -> List[Tuple[int, int]]:
    chunk_size = max(1, chunk_size)
    return [(start, min(start + chunk_size, total)) for start in range(0, total, chunk_size)]


def map_chunks(fn: Callable[[int, int], T], ranges: Sequence[Tuple[int, int]]) -> List[T]:
    """
    Apply fn(start, stop) to every range, results in input order.

    Each task runs in a copy of the caller's context so per-run log capture
    follows the work into the pool.
    """
    workers = min(settings.MAX_WORKERS, len(ranges))
    if workers <= 1:
        return [fn(start, stop) for start, stop in ranges]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(contextvars.copy_context().run, fn, start, stop)
            for start, stop in ranges
        ]
        return [f.result() for f in futures]
