import os
from typing import Callable, List, Optional, Sequence

from joblib import Parallel, delayed

from bifi.config import settings


def resolve_workers(workers: Optional[int] = None) -> int:
    """Explicit count, then BIFI_WORKERS, then the number of cores."""
    if workers is not None:
        return max(1, int(workers))
    if settings.BIFI_WORKERS is not None:
        return max(1, settings.BIFI_WORKERS)
    return os.cpu_count() or 1


def ordered_map(func: Callable, items: Sequence, workers: int = 1) -> List:
    """func over items, results in input order whatever the worker count."""
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    return Parallel(n_jobs=workers)(delayed(func)(item) for item in items)
