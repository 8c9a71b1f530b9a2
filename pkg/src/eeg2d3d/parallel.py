"""Deterministic thread mapping for per-channel / per-fold work."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

THREADS_ENV = "EEG2D3D_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def default_threads() -> int:
    value = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(value))
    except ValueError:
        return 1


def thread_map(fn: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> list[R]:
    """map() preserving input order; results are independent of thread count."""
    items = list(items)
    n = default_threads() if threads is None else max(1, threads)
    if n == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
