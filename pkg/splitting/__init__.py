"""
Distributed selection of the best Q nodes by splitting on normalized metrics.
"""
from splitting.exceptions import ContractViolationError, InvalidArgumentError, SelectionError

__all__ = [
    "SelectionError",
    "InvalidArgumentError",
    "ContractViolationError",
]
