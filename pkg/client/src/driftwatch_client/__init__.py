"""Reporting client for a driftwatch stats gateway."""

from .session import ClientError, ClientSession, RetryPolicy, TransportError

__version__ = "0.1.0"

__all__ = [
    "ClientError",
    "ClientSession",
    "RetryPolicy",
    "TransportError",
    "__version__",
]
