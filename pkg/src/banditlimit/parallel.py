"""Chunked replicate execution.

Replicates are split into fixed-size chunks that never depend on the thread
count; results come back in chunk order, so output is identical for any
number of workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

T = TypeVar("T")

CHUNK = 1 << 16


def chunk_bounds(n: int, chunk: int = CHUNK) -> list:
    return [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]


def map_chunks(fn: Callable[[int, int], T], n: int, threads: int = 1, chunk: int = CHUNK) -> list:
    bounds = chunk_bounds(n, chunk)
    if threads <= 1 or len(bounds) <= 1:
        return [fn(lo, hi) for lo, hi in bounds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda b: fn(*b), bounds))
