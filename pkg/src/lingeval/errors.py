"""Exception hierarchy shared across the package.

The CLI maps these onto its exit-code contract: InputError -> 2,
PreconditionError -> 3, any other LingevalError -> 1.
"""


class LingevalError(Exception):
    """Base class for all errors raised by lingeval."""


class InputError(LingevalError):
    """Malformed input: files, patterns, record formats."""


class PreconditionError(LingevalError):
    """A valid request that the current state does not permit."""
