"""Exception hierarchy.

Plain ValueError is raised for malformed arguments (non-finite scalars,
dimension mismatches, bad flags). The classes below mark failures that
callers may want to route differently; the CLI maps them to exit codes
(data and format problems to 3, numeric failures to 4).
"""

from __future__ import annotations


class SetencError(Exception):
    """Base class for package-specific failures."""


class FormatError(SetencError):
    """A serialized file violates its byte-level format contract."""


class ValidationError(SetencError):
    """Loaded data parses but violates a model invariant."""


class NumericError(SetencError):
    """A numeric procedure failed to meet its accuracy or sanity contract."""


class DegenerateBoundaryError(SetencError):
    """The minimax boundary is undefined because the two means coincide."""


class InsufficientDataError(SetencError):
    """Too few (distinct) data points for the requested model size."""


class TrainingDegenerateError(SetencError):
    """Training could not repair a degenerate configuration."""
