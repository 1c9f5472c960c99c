"""
Ordered parallel map used by every matrix, table and Monte-Carlo construction.
Results come back in input order and each item is computed independently, so
outputs never depend on the number of worker threads.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

# Set up logging
logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def map_ordered(fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = 1) -> List[R]:
    """
    Apply fn to every item, optionally on a thread pool, preserving order.

    Args:
        fn: Pure function of one item
        items: Work items
        threads: Worker count; None or <= 1 runs inline

    Returns:
        List of results in the order of items
    """
    items = list(items)
    if not threads or threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))
