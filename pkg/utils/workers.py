"""
Worker Pool

Row-chunked parallel execution with deterministic, order-preserving
aggregation.

Functions:
    - chunk_ranges(): Fixed-size index ranges over n items
    - run_chunked(): Apply fn to each chunk in parallel, results in input order
"""

import logging
from typing import Callable, List, Sequence, Tuple, TypeVar

import numpy as np
from joblib import Parallel, delayed

log = logging.getLogger(__name__)

T = TypeVar("T")

DEFAULT_CHUNK = 256


def chunk_ranges(n: int, chunk: int = DEFAULT_CHUNK) -> List[Tuple[int, int]]:
    """Half-open ranges covering [0, n). Independent of the worker count."""
    chunk = max(1, int(chunk))
    return [(start, min(start + chunk, n)) for start in range(0, n, chunk)]


def run_chunked(
    fn: Callable[[int, int], T],
    n: int,
    n_jobs: int = 1,
    chunk: int = DEFAULT_CHUNK,
) -> List[T]:
    """
    Runs `fn(start, stop)` over fixed chunks of [0, n).

    Chunk boundaries depend only on `n` and `chunk`, so the concatenated
    output is identical for any `n_jobs`.

    Args:
        fn: Callable receiving a half-open index range
        n: Number of items
        n_jobs: Worker threads (numpy releases the GIL in the heavy loops)
        chunk: Items per chunk

    Returns:
        List of per-chunk results in input order
    """
    ranges = chunk_ranges(n, chunk)
    if n_jobs <= 1 or len(ranges) <= 1:
        return [fn(a, b) for a, b in ranges]

    log.debug("Dispatching %d chunks to %d workers", len(ranges), n_jobs)
    return Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(fn)(a, b) for a, b in ranges
    )


def concat(parts: Sequence, axis: int = 0):
    """numpy concatenate that tolerates a single part."""
    if len(parts) == 1:
        return parts[0]
    return np.concatenate(parts, axis=axis)
