"""
Exceptions raised by the selection toolkit.
"""


class SelectionError(Exception):
    """Base class for every error raised by the toolkit."""


class InvalidArgumentError(SelectionError, ValueError):
    """
    A parameter is outside the range an operation is defined for.

    Args:
        param: Name of the offending parameter (used by the CLI to name the flag)
        message: Human-readable description of the violated constraint
    """

    def __init__(self, param: str, message: str):
        self.param = param
        super().__init__(f"{param}: {message}")


class ContractViolationError(SelectionError, RuntimeError):
    """An operation was called in a state its contract excludes."""
