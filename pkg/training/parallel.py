"""Fixed-chunk batch evaluation with an order-preserving thread pool.

Chunk boundaries depend only on the chunk size, and results are always
combined in chunk order, so the worker count never changes any output bit.
"""

from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

T = TypeVar("T")


def chunk_slices(n: int, chunk_size: int) -> list[slice]:
    if chunk_size < 1:
        raise ValueError("chunk_size must be at least 1")
    return [slice(start, min(start + chunk_size, n)) for start in range(0, n, chunk_size)]


def map_chunks(fn: Callable[[slice], T], n: int, chunk_size: int, threads: int = 1) -> list[T]:
    """Apply ``fn`` to each chunk of ``range(n)``; results come back in chunk order."""
    slices = chunk_slices(n, chunk_size)
    if threads <= 1 or len(slices) <= 1:
        return [fn(s) for s in slices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, slices))
