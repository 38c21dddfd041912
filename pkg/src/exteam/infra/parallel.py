"""Chunked worker pool with deterministic reduction order."""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import TypeVar

from exteam.exceptions import ConfigError

T = TypeVar("T")
R = TypeVar("R")

logger = logging.getLogger(__name__)


def chunked(items: Sequence[T], chunk_size: int) -> list[Sequence[T]]:
    """items를 고정 크기 chunk로 분할. chunk 경계는 worker 수와 무관."""
    if chunk_size < 1:
        raise ConfigError(f"chunk_size must be >= 1, got {chunk_size}")
    return [items[i : i + chunk_size] for i in range(0, len(items), chunk_size)]


def map_chunks(
    fn: Callable[[int, Sequence[T]], R],
    items: Sequence[T],
    chunk_size: int,
    max_workers: int = 1,
) -> list[R]:
    """Apply fn(chunk_index, chunk) to every chunk; results come back in chunk order.

    Callers reduce the returned list left to right, so results are bitwise
    identical for any max_workers.
    """
    chunks = chunked(items, chunk_size)
    if max_workers <= 1 or len(chunks) <= 1:
        return [fn(i, c) for i, c in enumerate(chunks)]

    results_by_index: dict[int, R] = {}
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        futures = {executor.submit(fn, i, c): i for i, c in enumerate(chunks)}
        for future in as_completed(futures):
            results_by_index[futures[future]] = future.result()

    logger.debug("map_chunks: %d chunks on %d workers", len(chunks), max_workers)
    # Return in original chunk order
    return [results_by_index[i] for i in range(len(chunks))]


def map_ordered(
    fn: Callable[[T], R],
    items: Sequence[T],
    max_workers: int = 1,
) -> list[R]:
    """Apply fn to each item (one task per item), preserving input order."""
    chunks = map_chunks(lambda _i, chunk: [fn(x) for x in chunk], items, 1, max_workers)
    return [r for chunk in chunks for r in chunk]
