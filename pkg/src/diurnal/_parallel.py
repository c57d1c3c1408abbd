"""Ordered, chunk-stable parallel map.

Work is always split into the same chunks regardless of the worker count and
results come back in submission order, so reductions over them are
bit-identical for any number of threads.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

_workers = 1


def set_default_workers(n: int) -> None:
    global _workers
    _workers = max(1, int(n))


def default_workers() -> int:
    return _workers


def chunked(n: int, size: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + size, n)) for lo in range(0, n, size)]


def ordered_map(func: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
    items = list(items)
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [func(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))
