"""Order-preserving parallel map used by sweeps and property suites."""
from concurrent.futures import ProcessPoolExecutor


def ordered_map(fn, items, workers: int = 1, chunksize: int = 1) -> list:
    """``[fn(x) for x in items]``, optionally on a process pool.

    Results come back in input order, so reports do not depend on the worker
    count.  ``fn`` and the items must be picklable when ``workers > 1``.
    """
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))
