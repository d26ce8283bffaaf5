"""Exception hierarchy shared across the package."""

from __future__ import annotations


class BellmeterError(Exception):
    """Base class for all package errors."""


class StructureError(BellmeterError):
    """Malformed input data: wrong shapes, missing fields, bad types."""


class DomainError(BellmeterError):
    """Structurally fine input outside the domain of an operation."""


class ModelError(BellmeterError):
    """Inconsistent hidden-variable model (Bayes or composition failure)."""


class SolverError(BellmeterError):
    """The LP solver failed to certify its own result."""
