"""Replicate scheduling for simulation loops.

Results are collected in replicate order regardless of worker count, so any
procedure whose replicates draw from per-index streams is schedule
invariant.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

T = TypeVar("T")


def parallel_map(fn: Callable[[int], T], n: int, workers: int = 1) -> list[T]:
    """``[fn(0), ..., fn(n-1)]``, optionally on a thread pool."""
    if workers is None or workers <= 1 or n <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n)))
