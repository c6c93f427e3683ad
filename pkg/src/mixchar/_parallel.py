import os
from concurrent.futures import ThreadPoolExecutor


def max_workers() -> int:
    try:
        return max(1, int(os.environ.get("MIXCHAR_THREADS", "1")))
    except ValueError:
        return 1


def pmap(fn, items):
    """Ordered map; threads only when MIXCHAR_THREADS > 1."""
    items = list(items)
    workers = min(max_workers(), len(items))
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))
