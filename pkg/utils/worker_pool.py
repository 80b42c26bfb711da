"""
Worker pool for independent per-item computations.

This module provides a context manager that owns a thread pool sized from
the settings and always shuts it down, even when the work inside fails.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Iterable, List, Optional

logger = logging.getLogger(__name__)


class WorkerPoolSession:
    """
    Context manager for a ThreadPoolExecutor used by pairwise demos and
    per-stage invariant computations.

    With a single worker no executor is created and work runs inline. Results
    always come back in input order, so output never depends on the worker
    count.

    Example:
        >>> with WorkerPoolSession(workers=4) as pool:
        ...     heights = pool.map_ordered(compute_height, probes)
    """

    def __init__(self, workers: int = 1, name: str = "alab"):
        """
        Initialize the WorkerPoolSession.

        Args:
            workers: Number of worker threads; 1 means run inline
            name: Thread name prefix
        """
        if workers < 1:
            raise ValueError(f"worker count must be at least 1, got {workers}")
        self.workers = workers
        self.name = name
        self.executor: Optional[ThreadPoolExecutor] = None

    def __enter__(self) -> "WorkerPoolSession":
        if self.workers > 1:
            self.executor = ThreadPoolExecutor(max_workers=self.workers, thread_name_prefix=self.name)
            logger.debug(f"Started worker pool with {self.workers} threads")
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        """
        Shut the pool down.

        Shutdown errors are logged so they never mask an exception raised
        inside the with block.

        Returns:
            False: Exceptions from the with block propagate
        """
        self._shutdown()
        return False

    def map_ordered(self, func: Callable[[Any], Any], items: Iterable[Any]) -> List[Any]:
        """
        Apply func to every item and return the results in input order.

        Raises:
            Exception: The first exception raised by func, in input order
        """
        items = list(items)
        if self.executor is None:
            return [func(item) for item in items]
        return list(self.executor.map(func, items))

    def _shutdown(self):
        if self.executor is None:
            return
        try:
            self.executor.shutdown(wait=True)
            logger.debug("Worker pool shut down")
        except Exception as e:
            logger.warning(f"Failed to shut down worker pool: {e}")
        finally:
            self.executor = None
