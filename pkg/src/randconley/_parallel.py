import os
from concurrent.futures import ProcessPoolExecutor

WORKERS_ENV = "RANDCONLEY_WORKERS"


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def pmap(func, items, workers: int | None = None) -> list:
    """Order-preserving map, fanned out over processes when ``workers > 1``."""
    items = list(items)
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [func(it) for it in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as ex:
        return list(ex.map(func, items, chunksize=max(1, len(items) // (4 * workers))))
