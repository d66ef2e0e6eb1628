"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, BudgetError -> 3,
DiagnosticFailure -> 1.
"""


class CCFractalError(Exception):
    pass


class InputError(CCFractalError, ValueError):
    """Bad argument to a library operation (dimension mismatch, range)."""


class ConfigError(CCFractalError, ValueError):
    """Invalid experiment configuration."""


class ConstructionError(CCFractalError, RuntimeError):
    """A generator invariant was violated during construction."""


class BudgetError(CCFractalError, RuntimeError):
    """A piece/address budget would be exceeded; nothing was generated."""


class DiagnosticFailure(CCFractalError, RuntimeError):
    """A configured diagnostic bound did not hold."""
