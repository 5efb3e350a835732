"""Order-preserving process-pool map.

``CPSRES_THREADS`` caps the worker count: unset means serial, ``0`` means one
worker per CPU.  Results always come back in input order.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

ENV_VAR = "CPSRES_THREADS"


def resolve_workers(workers: int | None = None) -> int:
    if workers is None:
        raw = os.environ.get(ENV_VAR, "").strip()
        workers = int(raw) if raw else 1
    if workers <= 0:
        workers = os.cpu_count() or 1
    return workers


def map_ordered(fn, items, workers: int | None = None, chunksize: int | None = None):
    items = list(items)
    n = min(resolve_workers(workers), len(items))
    if n <= 1:
        return [fn(it) for it in items]
    if chunksize is None:
        chunksize = max(1, len(items) // (4 * n))
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))
