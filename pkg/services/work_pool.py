"""
Thread pool for running independent experiment instances.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

from constants import AppConstants
from utils.logging import log_debug, log_warning

T = TypeVar("T")
R = TypeVar("R")


def threads_from_environment() -> int:
    """Worker count from DIMER_CFF_THREADS, defaulting to the CPU count."""
    default = os.cpu_count() or 1
    raw = os.environ.get(AppConstants.ENV_THREADS)
    if raw is None:
        return default
    try:
        value = int(raw)
    except ValueError:
        log_warning(f"Ignoring {AppConstants.ENV_THREADS}={raw!r}: not an integer")
        return default
    return max(1, value)


class WorkPool:
    """Maps a function over instances in parallel, returning results in input order."""

    def __init__(self, max_workers: Optional[int] = None):
        """
        Initialize WorkPool.

        Args:
            max_workers: Thread cap (defaults to DIMER_CFF_THREADS or the CPU count)
        """
        self.max_workers = max(1, max_workers if max_workers is not None else threads_from_environment())

    def map(self, fn: Callable[[T], R], items: Sequence[T]) -> List[R]:
        if self.max_workers == 1 or len(items) <= 1:
            return [fn(item) for item in items]
        log_debug(f"Running {len(items)} tasks on {self.max_workers} threads")
        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            return list(executor.map(fn, items))
