"""Exception types shared across the package.

Every rejection of bad input raises :class:`ValidationError` with a message
that names the offending value (and, for file input, the file and record).
Unexpected runtime failures use :class:`AnchoringError` directly.
"""

from __future__ import annotations


class AnchoringError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(AnchoringError, ValueError):
    """Input, schema, or contract violation detected before any mutation."""
