"""Asynchronous dataflow scheduler with checkpoint/resume."""

from .errors import (Cancelled, ExecError, GraphHashMissing, InputMismatch,
                     MaxIterations, OutputTypeViolation, ResumeError,
                     ResumeTypeError, UnhandledTag, WorkerError)
from .state import ExecutionState, Frame, Slot, graph_hash
from .scheduler import ExecutionPlan, Job, RunOptions, prepare, run_graph
from .checkpoint import checkpoint_bytes, restore

__all__ = [
    "Cancelled", "ExecError", "GraphHashMissing", "InputMismatch",
    "MaxIterations", "OutputTypeViolation", "ResumeError", "ResumeTypeError",
    "UnhandledTag", "WorkerError",
    "ExecutionState", "Frame", "Slot", "graph_hash",
    "ExecutionPlan", "Job", "RunOptions", "prepare", "run_graph",
    "checkpoint_bytes", "restore",
]
