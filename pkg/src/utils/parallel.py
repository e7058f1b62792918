"""
Parallel map with input-order aggregation.

Every parallel loop in the package goes through ``parallel_map`` so that
results are identical to a sequential run regardless of worker count.
"""
import logging
from typing import Callable, Iterable, List, Optional, TypeVar

from joblib import Parallel, delayed

from src.core.config import LabConfig

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def resolve_workers(workers: Optional[int]) -> int:
    if workers is None:
        workers = LabConfig.WORKERS
    if workers == 0:
        workers = 1
    return workers


def parallel_map(func: Callable[[T], R], items: Iterable[T], workers: Optional[int] = None,
                 prefer: str = "processes") -> List[R]:
    """``[func(x) for x in items]``, optionally spread over joblib workers.

    ``workers=1`` runs in-process; ``-1`` uses every core. Results come
    back in input order either way.
    """
    items = list(items)
    n_jobs = resolve_workers(workers)
    if n_jobs == 1 or len(items) <= 1:
        return [func(item) for item in items]
    logger.debug("dispatching %d tasks to %d workers", len(items), n_jobs)
    return list(Parallel(n_jobs=n_jobs, prefer=prefer)(delayed(func)(item) for item in items))


def chunked(items: List[T], chunks: int) -> List[List[T]]:
    """Split ``items`` into at most ``chunks`` contiguous, order-preserving pieces."""
    chunks = max(1, min(chunks, len(items)))
    size, extra = divmod(len(items), chunks)
    pieces, start = [], 0
    for i in range(chunks):
        stop = start + size + (1 if i < extra else 0)
        pieces.append(items[start:stop])
        start = stop
    return [p for p in pieces if p]
