"""Exception types shared by every feature package.

Library code raises these; `src/main.py` maps them to exit codes.
"""
from typing import Optional


class PoissonBEError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(PoissonBEError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConfigError(PoissonBEError):
    """Invalid or incomplete experiment configuration."""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        if field:
            message = f"{message} (field: {field})"
        super().__init__(message)


class ConvergenceError(PoissonBEError):
    """An iterative method stopped before reaching its tolerance.

    Attributes:
        estimate: Best scalar estimate reached (eigenvalue solvers).
        best: Best iterate reached (linear solvers), if any.
        residual: Residual measure at the point of failure.
        iterations: Iterations performed.
    """

    def __init__(self, message: str, estimate=None, best=None, residual=None, iterations: int = 0):
        self.estimate = estimate
        self.best = best
        self.residual = residual
        self.iterations = iterations
        super().__init__(message)


class BreakdownError(ConvergenceError):
    """CG met a non-positive curvature direction; the operator is not SPD."""


class PreconditionViolation(PoissonBEError):
    """Inputs do not satisfy a stated precondition (e.g. alpha below the norm)."""


class VerificationFailure(PoissonBEError):
    """A brute-force check disagreed with the expected matrix.

    Attributes:
        row, column: Location of the worst entry.
        expected, actual: Values at that entry.
    """

    def __init__(self, message: str, row=None, column=None, expected=None, actual=None):
        self.row = row
        self.column = column
        self.expected = expected
        self.actual = actual
        if row is not None:
            message = f"{message} (worst entry ({row}, {column}): expected {expected!r}, got {actual!r})"
        super().__init__(message)


class QubitBudgetError(PoissonBEError):
    """Dense realization refused because the circuit is too wide."""

    def __init__(self, qubits: int, limit: int, max_feasible_ell: Optional[int] = None):
        self.qubits = qubits
        self.limit = limit
        self.max_feasible_ell = max_feasible_ell
        message = f"Circuit needs {qubits} qubits, dense realization limit is {limit}"
        if max_feasible_ell is not None:
            message += f"; largest feasible ell for this instance family is {max_feasible_ell}"
        super().__init__(message)


class MatrixMarketError(PoissonBEError):
    """Malformed Matrix Market or vector CSV file."""

    def __init__(self, message: str, path: str = "", line: Optional[int] = None):
        self.path = path
        self.line = line
        where = f"{path}:{line}" if line is not None else path
        super().__init__(f"{where}: {message}" if where else message)


class FieldFormatError(MatrixMarketError):
    """Malformed permeability field export."""
