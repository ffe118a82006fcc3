"""Exception hierarchy for lowsync-krylov."""

from typing import Optional


class KrylovError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(KrylovError, ValueError):
    """Operands with the wrong shape or an otherwise invalid call."""


class ConfigurationError(KrylovError, ValueError):
    """Illegal solver or benchmark configuration."""


class SingularFactorError(KrylovError, ArithmeticError):
    """A triangular factor or the operator itself is singular."""


class FactorizationError(KrylovError, ArithmeticError):
    """Incomplete factorization hit a zero pivot."""


class SolverBreakdownError(KrylovError, ArithmeticError):
    """The projected system of a restart cycle could not be solved."""


class BreakdownError(KrylovError, ArithmeticError):
    """A muscle broke down while orthogonalizing a block column."""

    def __init__(self, message: str, block: int):
        self.block = block
        super().__init__(message)


class MatrixMarketError(KrylovError, ValueError):
    """Malformed Matrix Market file."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsupportedFormatError(MatrixMarketError):
    """Valid Matrix Market header describing a format we do not read."""
