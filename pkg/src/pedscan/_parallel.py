"""Deterministic worker-pool helper.

PEDSCAN_THREADS caps worker parallelism (0 or unset = auto).  Results are
always returned in input order, so parallel runs match sequential ones.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count() -> int:
    raw = os.environ.get("PEDSCAN_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"PEDSCAN_THREADS must be an integer, got {raw!r}")
    if n < 0:
        raise ValueError("PEDSCAN_THREADS must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)


def parallel_map(fn, items) -> list:
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
