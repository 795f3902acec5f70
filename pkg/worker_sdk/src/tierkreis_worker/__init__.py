"""Worker SDK: register annotated Python functions under a namespace, derive
their wire-type schemes, and serve the worker protocol."""

from .client import CallbackError, callback_run_graph
from .registry import FunctionEntry, Namespace, RegistrationError, Worker
from .schema import SchemaError, derive_scheme
from .server import (RunContext, WorkerServer, current_context,
                     start_worker_server)
from .wire import GraphHandle, Tagged, WireError

__all__ = [
    "CallbackError", "callback_run_graph",
    "FunctionEntry", "Namespace", "RegistrationError", "Worker",
    "SchemaError", "derive_scheme",
    "RunContext", "WorkerServer", "current_context", "start_worker_server",
    "GraphHandle", "Tagged", "WireError",
]

__version__ = "0.1.0"
