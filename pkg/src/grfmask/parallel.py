"""Order-preserving thread-pool map with a deterministic contract.

Work items must be independent; results are gathered by input position, so
the output is identical for any worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

__all__ = ["resolve_threads", "parallel_map"]


def resolve_threads(threads: int | None = None) -> int:
    """Explicit argument wins; GRFMASK_THREADS is the fallback; default 1."""
    if threads is None:
        env = os.environ.get("GRFMASK_THREADS", "").strip()
        threads = int(env) if env else 1
    if threads < 1:
        raise ValueError(f"thread count must be >= 1, got {threads}")
    return threads


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    seq: Sequence[T] = list(items)
    if threads <= 1 or len(seq) <= 1:
        return [fn(x) for x in seq]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, seq))
