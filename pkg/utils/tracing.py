"""
OpenTelemetry setup for the command-line tool.

Spans are always created; they are only exported (to stderr) when console
tracing is switched on.
"""

import logging
import os
import sys

from opentelemetry import trace
from opentelemetry.sdk.resources import Resource
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import ConsoleSpanExporter, SimpleSpanProcessor

logger = logging.getLogger(__name__)

_initialized = False


def initialize_tracing(console: bool = False) -> bool:
    """
    Install a tracer provider exporting to stderr.

    Args:
        console: Export finished spans to stderr

    Returns:
        bool: True when an exporting provider was installed
    """
    global _initialized
    if not console:
        logger.debug("Console tracing disabled; using the default tracer")
        return False
    if _initialized:
        return True
    service_name = os.getenv("OTEL_SERVICE_NAME", "Abelian Lab")
    os.environ.setdefault("OTEL_SERVICE_NAME", service_name)
    provider = TracerProvider(resource=Resource.create({"service.name": service_name}))
    provider.add_span_processor(SimpleSpanProcessor(ConsoleSpanExporter(out=sys.stderr)))
    trace.set_tracer_provider(provider)
    _initialized = True
    logger.info(f"Console tracing enabled for service '{service_name}'")
    return True


def get_tracer(name: str):
    return trace.get_tracer(name)
