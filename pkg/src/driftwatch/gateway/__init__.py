"""HTTP service for collecting stats, distributions, and alerts."""

from .service import GatewayState, create_app, serve
from .store import EventLog, StoreCorrupt

__all__ = ["EventLog", "StoreCorrupt", "GatewayState", "create_app", "serve"]
