"""Ordered parallel map over sweep points."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Optional, TypeVar

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "OPTOMECH_SIM_THREADS"


def resolve_threads(flag: Optional[int] = None, configured: Optional[int] = None) -> int:
    """Worker count from the CLI flag, the config file, then the environment.

    Zero means one worker per CPU. Without any setting the run is serial.
    """
    for value in (flag, configured):
        if value is not None:
            return _auto(value)
    env = os.environ.get(THREADS_ENV, "").strip()
    if env:
        try:
            return _auto(int(env))
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return 1


def _auto(n: int) -> int:
    if n < 0:
        raise ValueError(f"thread count must be >= 0, got {n}")
    return n if n > 0 else (os.cpu_count() or 1)


def map_ordered(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """``[fn(x) for x in items]``, possibly in worker processes.

    Results are returned in input order regardless of completion order, so the
    output does not depend on the worker count. ``fn`` must be picklable.
    """
    items = list(items)
    workers = min(max(1, threads), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))
