from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def default_jobs() -> int:
    return os.cpu_count() or 1


def parallel_map(fn: Callable[[T], R], items: Iterable[T], jobs: int | None = 1) -> list[R]:
    """``[fn(x) for x in items]`` across up to ``jobs`` worker processes.

    Output order always follows input order, so results do not depend on the
    worker count. ``fn`` must be a picklable module-level callable.
    """
    items = list(items)
    jobs = default_jobs() if jobs is None else max(1, int(jobs))
    if jobs == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(fn, items))
