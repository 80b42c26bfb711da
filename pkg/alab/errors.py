"""
Exception types shared by the alab package.

All of them derive from ValueError so callers that only guard against bad
input keep working.
"""

from typing import Any, Optional


class AlabError(ValueError):
    """Base class for every error raised by alab."""


class DimensionMismatchError(AlabError):
    """Matrix, vector or element shapes do not agree."""


class InvalidElementError(AlabError):
    """An element does not belong to the group it was given for."""


class PreconditionError(AlabError):
    """An operation was called outside its documented domain."""


class NotPureError(AlabError):
    """
    A subgroup that had to be pure is not.

    Args:
        message: Human readable description
        witness: The NonPurityWitness that proves it
    """

    def __init__(self, message: str, witness: Any = None):
        super().__init__(message)
        self.witness = witness


class ScenarioError(AlabError):
    """
    A scenario or input document failed validation.

    Args:
        path: JSON path of the offending field, e.g. "$.inputs.gens[1]"
        message: What is wrong with it
    """

    def __init__(self, path: str, message: str, cause: Optional[Exception] = None):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.cause = cause
