"""Named, counter-based random streams and order-preserving chunked maps.

Every random draw in the package comes from ``stream(seed, name, *keys)``.
The generator is a Philox counter-based bit generator keyed by the seed,
a stable hash of the stream name and any extra integer keys (typically a
chunk index).  Work split into chunks therefore draws the same numbers no
matter how many threads execute the chunks.
"""
from __future__ import annotations

import os
import zlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np

# Fixed chunk size for sampling loops; results must not depend on threads.
CHUNK = 1 << 16

_threads = 1


def set_threads(n: int | None) -> int:
    """Set the default worker count used by :func:`chunk_map`.  ``None`` or 0 means cpu count."""
    global _threads
    _threads = max(1, int(n or os.cpu_count() or 1))
    return _threads


def get_threads() -> int:
    return _threads


def _name_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def stream(seed: int, name: str, *keys: int) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, _name_key(name), *[int(k) for k in keys]])
    return np.random.Generator(np.random.Philox(ss))


def chunk_map(fn, items, threads: int | None = None) -> list:
    """``[fn(x) for x in items]`` evaluated on a thread pool, results in input order."""
    items = list(items)
    threads = _threads if threads is None else max(1, int(threads))
    if threads == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def chunk_ranges(total: int, size: int = CHUNK) -> list[tuple[int, int, int]]:
    """Split ``range(total)`` into ``(chunk_index, start, stop)`` triples."""
    return [(i, s, min(s + size, total)) for i, s in enumerate(range(0, total, size))]
