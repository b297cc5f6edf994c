"""Deterministic sampling and process-parallel evaluation.

Randomness comes exclusively from counter-based Philox generators keyed
by (seed, stream), so every draw is reproducible from the seed alone.
Scans generate all sample points up front and then map a pure function
over them; parallelism only changes who computes which chunk, never
what is computed, so results are byte-identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from multiprocessing import get_context
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

# Chunk size for executor.map; fixed so the work split never depends on
# the worker count.
CHUNK_SIZE = 16

T = TypeVar("T")
R = TypeVar("R")


def rng_for(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator for a (seed, stream) pair.

    Distinct streams are statistically independent; the same pair always
    reproduces the same draws regardless of platform or history.
    """
    if not 0 <= seed < 2 ** 64:
        raise ValueError(f"seed must be a u64, got {seed}")
    if not 0 <= stream < 2 ** 64:
        raise ValueError(f"stream must be a u64, got {stream}")
    return np.random.Generator(np.random.Philox(key=np.array([seed, stream], dtype=np.uint64)))


def sample_box(seed: int, n: int, bounds: Sequence[tuple[float, float]],
               method: str = "lhs", stream: int = 0) -> np.ndarray:
    """n points in a box, Latin hypercube by default.

    Parameters
    ----------
    seed, stream : int
        Philox key; see :func:`rng_for`.
    n : int
        Number of points.
    bounds : sequence of (lo, hi)
        One interval per dimension.
    method : str
        "lhs" stratifies each axis into n cells and places one point per
        cell (better space coverage at small n); "uniform" draws plain
        i.i.d. points.

    Returns
    -------
    ndarray, shape (n, len(bounds))
    """
    if n <= 0:
        raise ValueError(f"need n >= 1, got {n}")
    rng = rng_for(seed, stream)
    dims = len(bounds)
    if method == "lhs":
        u = np.empty((n, dims), dtype=np.float64)
        for j in range(dims):
            u[:, j] = (rng.permutation(n) + rng.uniform(size=n)) / n
    elif method == "uniform":
        u = rng.uniform(size=(n, dims))
    else:
        raise ValueError(f"unknown sampling method {method!r}")
    lo = np.array([b[0] for b in bounds], dtype=np.float64)
    hi = np.array([b[1] for b in bounds], dtype=np.float64)
    return lo + u * (hi - lo)


def sample_torus(seed: int, n: int, method: str = "lhs", stream: int = 0) -> np.ndarray:
    """n starting points on the torus, shape (n, 2)."""
    return sample_box(seed, n, [(0.0, 1.0), (0.0, 1.0)], method=method, stream=stream)


def _chunks(items: list, size: int) -> Iterable[list]:
    for i in range(0, len(items), size):
        yield items[i:i + size]


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1,
                 chunk_size: int = CHUNK_SIZE) -> list[R]:
    """Map ``fn`` over ``items``, optionally across processes, in order.

    ``fn`` must be a picklable pure function.  The spawn start method
    avoids inheriting BLAS thread state mid-operation.  Output order
    always matches input order.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    ctx = get_context("spawn")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        return list(pool.map(fn, items, chunksize=chunk_size))


def standard_error(successes: int, trials: int) -> float:
    """Binomial standard error of a proportion estimate."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = successes / trials
    return math.sqrt(p * (1.0 - p) / trials)
