"""
Chunked worker pool with a deterministic merge.

Work is split into contiguous chunks, processed by a thread pool and merged in
chunk order, so results never depend on the worker count.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, Hashable, List, Sequence, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")
V = TypeVar("V")


def map_chunks(fn: Callable[[Sequence[T]], R], items: Sequence[T], threads: int = 1) -> List[R]:
    """Apply fn to contiguous chunks of items; results come back in chunk order."""
    if threads <= 1 or len(items) < 2 * threads:
        return [fn(items)]
    size = -(-len(items) // threads)
    chunks = [items[i : i + size] for i in range(0, len(items), size)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, chunks))


def merge_sums(parts: List[Dict[Hashable, V]], add: Callable[[V, V], V]) -> Dict[Hashable, V]:
    """Key-wise sum of partial maps, merged in the order given."""
    if len(parts) == 1:
        return parts[0]
    out: Dict[Hashable, V] = {}
    for part in parts:
        for key, value in part.items():
            cur = out.get(key)
            out[key] = value if cur is None else add(cur, value)
    return out
