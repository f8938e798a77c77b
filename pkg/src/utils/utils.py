from __future__ import annotations

import multiprocessing
import sys
from typing import Callable, Iterable, Sequence, TypeVar

from tqdm import tqdm

T = TypeVar("T")
R = TypeVar("R")

# Fixed width for tqdm bars
TQDM_NCOLS = 80


def chunk_size(total: int, workers: int, min_chunk: int = 16) -> int:
    """Chunk size that gives each worker a few chunks without going below min_chunk."""
    if workers <= 1:
        return max(total, 1)
    return max(min_chunk, -(-total // (workers * 4)))


def parallel_map(func: Callable[[T], R], items: Sequence[T], workers: int = 1) -> list[R]:
    """Map over items, in a process pool when workers > 1; results keep the input order."""
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with multiprocessing.Pool(processes=min(workers, len(items))) as pool:
        return pool.map(func, items)


def progress(iterable: Iterable[T], desc: str, unit: str = "img", enabled: bool = True, total: int | None = None) -> Iterable[T]:
    """Wrap an iterable in a stderr progress bar when enabled."""
    if not enabled:
        return iterable
    return tqdm(
        iterable,
        desc=desc,
        unit=unit,
        total=total,
        file=sys.stderr,
        dynamic_ncols=False,
        ncols=TQDM_NCOLS,
        mininterval=0.5,
        leave=False,
    )
