#!/usr/bin/env python3
"""
Unit tests for environment settings, log level parsing and tracing setup.
"""

import logging
import os
import sys
import unittest
from unittest.mock import patch

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from utils.config import LabSettings, load_settings
from utils.logger import parse_level
from utils.tracing import get_tracer, initialize_tracing

CLEAN_ENV = {k: v for k, v in os.environ.items() if not k.startswith("ALAB_")}


class TestSettings(unittest.TestCase):

    def test_defaults(self):
        with patch.dict(os.environ, CLEAN_ENV, clear=True):
            self.assertEqual(load_settings(load_env_file=False), LabSettings())

    def test_environment_overrides(self):
        env = {**CLEAN_ENV, "ALAB_THREADS": "4", "ALAB_SEED": "9", "ALAB_TRACE_CONSOLE": "yes",
               "ALAB_LOG_LEVEL": "DEBUG"}
        with patch.dict(os.environ, env, clear=True):
            settings = load_settings(load_env_file=False)
        self.assertEqual((settings.threads, settings.seed, settings.trace_console), (4, 9, True))
        self.assertEqual(settings.log_level, "DEBUG")

    def test_bad_integer_names_the_key(self):
        with patch.dict(os.environ, {**CLEAN_ENV, "ALAB_PRIME_BOUND": "seven"}, clear=True):
            with pytest.raises(ValueError, match="ALAB_PRIME_BOUND"):
                load_settings(load_env_file=False)

    def test_minimum_is_enforced(self):
        with patch.dict(os.environ, {**CLEAN_ENV, "ALAB_THREADS": "0"}, clear=True):
            with pytest.raises(ValueError, match="ALAB_THREADS must be at least 1"):
                load_settings(load_env_file=False)


class TestLogLevels(unittest.TestCase):

    def test_names_and_numbers(self):
        self.assertEqual(parse_level("debug"), logging.DEBUG)
        self.assertEqual(parse_level(" WARNING "), logging.WARNING)
        self.assertEqual(parse_level(logging.ERROR), logging.ERROR)

    def test_unknown_level(self):
        with pytest.raises(ValueError, match="unknown log level"):
            parse_level("LOUD")


class TestTracing(unittest.TestCase):

    def test_disabled_tracing_installs_nothing(self):
        with patch("utils.tracing.trace.set_tracer_provider") as set_provider:
            self.assertFalse(initialize_tracing(False))
            set_provider.assert_not_called()

    def test_spans_work_without_exporter(self):
        tracer = get_tracer("tests")
        with tracer.start_as_current_span("alab.test") as span:
            span.set_attribute("alab.operation", "snf")


if __name__ == '__main__':
    unittest.main(verbosity=2)
