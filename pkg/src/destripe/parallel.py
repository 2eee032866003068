"""Parallelism cap shared by FFTs, slice loops and parameter sweeps.

``DESTRIPE_THREADS`` limits the number of worker threads (default: all CPUs).
"""

import os
from concurrent.futures import ThreadPoolExecutor


def max_threads():
    raw = os.environ.get("DESTRIPE_THREADS", "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"DESTRIPE_THREADS must be an integer, got {raw!r}") from None
        return max(1, n)
    return os.cpu_count() or 1


def fft_workers():
    return max_threads()


def map_ordered(fn, items):
    """``[fn(x) for x in items]``, threaded up to the cap; order is preserved."""
    items = list(items)
    n = min(max_threads(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
