#!/usr/bin/env python3
"""
Unit tests for WorkerPoolSession shutdown guarantees.

Tests cover:
1. Results come back in input order for any worker count
2. A single worker runs inline without an executor
3. The executor is shut down exactly once, also when the work fails
4. A failing shutdown does not mask the original error

ThreadPoolExecutor is patched with a Mock so shutdown calls can be counted.
"""

import os
import sys
import unittest
from unittest.mock import Mock, patch

import pytest

# Add the parent directory to the path so we can import from utils
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from utils.worker_pool import WorkerPoolSession


class TestWorkerPoolSession(unittest.TestCase):
    """Test suite for WorkerPoolSession ordering and cleanup."""

    def test_results_keep_input_order(self):
        items = list(range(40))
        for workers in (1, 3, 8):
            with WorkerPoolSession(workers=workers) as pool:
                self.assertEqual(pool.map_ordered(lambda x: x * x, items), [x * x for x in items])

    def test_single_worker_runs_inline(self):
        with patch("utils.worker_pool.ThreadPoolExecutor") as executor_class:
            with WorkerPoolSession(workers=1) as pool:
                self.assertIsNone(pool.executor)
                self.assertEqual(pool.map_ordered(str, [1, 2]), ["1", "2"])
            executor_class.assert_not_called()

    def test_worker_count_must_be_positive(self):
        with pytest.raises(ValueError, match="at least 1"):
            WorkerPoolSession(workers=0)

    def test_executor_is_shut_down(self):
        # Arrange
        executor = Mock()
        executor.map.side_effect = lambda func, items: map(func, items)
        with patch("utils.worker_pool.ThreadPoolExecutor", return_value=executor):
            session = WorkerPoolSession(workers=4, name="test-pool")

            # Act
            with session as pool:
                self.assertEqual(pool.map_ordered(abs, [-1, -2]), [1, 2])

        # Assert
        executor.shutdown.assert_called_once_with(wait=True)
        self.assertIsNone(session.executor)

    def test_exception_in_block_still_shuts_down(self):
        executor = Mock()
        with patch("utils.worker_pool.ThreadPoolExecutor", return_value=executor):
            with pytest.raises(RuntimeError, match="work failed"):
                with WorkerPoolSession(workers=2):
                    raise RuntimeError("work failed")
        executor.shutdown.assert_called_once_with(wait=True)

    def test_failing_shutdown_does_not_mask_error(self):
        executor = Mock()
        executor.shutdown.side_effect = Exception("shutdown failed")
        with patch("utils.worker_pool.ThreadPoolExecutor", return_value=executor):
            with pytest.raises(KeyError):
                with WorkerPoolSession(workers=2):
                    raise KeyError("original")
        executor.shutdown.assert_called_once()

    def test_failing_shutdown_is_swallowed(self):
        executor = Mock()
        executor.shutdown.side_effect = Exception("shutdown failed")
        with patch("utils.worker_pool.ThreadPoolExecutor", return_value=executor):
            with WorkerPoolSession(workers=2):
                pass
        executor.shutdown.assert_called_once()

    def test_worker_errors_propagate(self):
        def fail_on_three(x):
            if x == 3:
                raise ValueError("three")
            return x

        with pytest.raises(ValueError, match="three"):
            with WorkerPoolSession(workers=3) as pool:
                pool.map_ordered(fail_on_three, range(6))


if __name__ == '__main__':
    unittest.main(verbosity=2)
