"""Execution error taxonomy; each carries a stable ``kind`` for the wire."""

from __future__ import annotations

from typing import Optional


class ExecError(Exception):
    kind = "ExecError"

    def __init__(self, message: str, locations: Optional[list[str]] = None):
        self.message = message
        self.locations = locations or []
        super().__init__(message)


class InputMismatch(ExecError):
    kind = "InputMismatch"


class WorkerError(ExecError):
    kind = "WorkerError"

    def __init__(self, function: str, message: str, locations=None):
        self.function = function
        super().__init__(f"{function}: {message}", locations)


class OutputTypeViolation(ExecError):
    kind = "OutputTypeViolation"

    def __init__(self, function: str, path: str, message: str):
        self.function = function
        self.path = path
        super().__init__(f"{function} output at {path or '/'}: {message}")


class MaxIterations(ExecError):
    kind = "MaxIterations"


class Cancelled(ExecError):
    kind = "Cancelled"

    def __init__(self, message: str = "execution cancelled"):
        super().__init__(message)


class UnhandledTag(ExecError):
    kind = "UnhandledTag"


class ResumeError(ExecError):
    kind = "ResumeError"


class GraphHashMissing(ResumeError):
    kind = "GraphHashMissing"


class ResumeTypeError(ResumeError):
    kind = "ResumeTypeError"
