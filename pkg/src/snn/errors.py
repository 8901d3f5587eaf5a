"""Exception taxonomy shared across the package.

The command-line layer maps these onto process exit codes: usage problems
exit 1, data problems exit 2, numerical failures exit 3.
"""

from __future__ import annotations


class UsageError(ValueError):
    """Invalid configuration or invocation (bad flag value, absurd sizes)."""


class DataError(ValueError):
    """Malformed, missing, or degenerate input data."""


class NumericalError(RuntimeError):
    """An optimizer or linear solve failed beyond recovery."""
