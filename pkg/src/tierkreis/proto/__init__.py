"""HTTP wire interfaces: the worker surface (signature listing, function
execution) and the runtime surface (job submission, polling, checkpoints),
plus clients, signature aggregation, and request forwarding for trees of
runtimes."""

from .wire import (RunContext, error_body, signature_from_json,
                   signature_to_json)
from .client import RuntimeClient, TransportError, WireError, WorkerClient
from .server import RuntimeServer, ServerConfig

__all__ = [
    "RunContext", "error_body", "signature_from_json", "signature_to_json",
    "RuntimeClient", "TransportError", "WireError", "WorkerClient",
    "RuntimeServer", "ServerConfig",
]
