"""Exception hierarchy shared by all modules.

Exit-code mapping used by the CLI driver:
    ValidationError -> 2, ResourceLimitError -> 3, NumericError -> 4.
"""


class DhlabError(Exception):
    """Base class for all library errors."""


class ValidationError(DhlabError, ValueError):
    """A parameter violates a documented precondition or invariant."""


class ResourceLimitError(DhlabError):
    """An enumeration or table would exceed the configured budget."""

    def __init__(self, message, suggestion=None):
        super().__init__(message)
        self.suggestion = suggestion


class NumericError(DhlabError, ArithmeticError):
    """A quadrature or fit failed to converge; carries diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
