"""Exception hierarchy shared by the library, the CLI and the HTTP surface"""

from typing import Optional


class IK4Error(Exception):
    """Base class; ``exit_code`` is what the CLI returns for this failure."""

    exit_code = 1


class UsageError(IK4Error):
    exit_code = 2


class FormulaSyntaxError(IK4Error):
    """Malformed formula text; ``position`` is the 0-based character offset."""

    exit_code = 2

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class _FileError(IK4Error):
    exit_code = 3

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ModelFileError(_FileError):
    pass


class ProofFileError(_FileError):
    pass


class TreeSyntaxError(_FileError):
    pass


class InvariantViolation(IK4Error):
    """A machine-checked property of the construction failed."""

    exit_code = 4


class OracleContractError(InvariantViolation):
    """The oracle was asked for a witness whose triggering condition does not hold."""


class BudgetExceeded(InvariantViolation):
    pass


class ValuationError(IK4Error, ValueError):
    exit_code = 3


class WorldRangeError(IK4Error, IndexError):
    exit_code = 2


class WidthMismatchError(IK4Error, ValueError):
    exit_code = 2


class PosetMismatchError(IK4Error, ValueError):
    exit_code = 2


class TreeError(IK4Error, ValueError):
    exit_code = 2
