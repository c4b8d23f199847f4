"""Exception hierarchy shared by the solver modules."""


class HpmOcpError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(HpmOcpError, ValueError):
    pass


class SingularMatrixError(HpmOcpError, ArithmeticError):
    pass


class BoundarySystemSingularError(SingularMatrixError):
    """The state-to-costate block of the transition matrix cannot be inverted.

    The linear boundary value problem has no unique solution on this horizon.
    """


class AccuracyError(HpmOcpError):
    pass


class DivergenceError(HpmOcpError, ArithmeticError):
    pass


class SequencingError(HpmOcpError):
    pass


class ValidationError(HpmOcpError, ValueError):
    pass


class ProblemValidationError(ValidationError):
    """Raised when a problem fails validation; carries every issue found."""

    def __init__(self, issues):
        self.issues = list(issues)
        lines = "; ".join(str(i) for i in self.issues)
        super().__init__(f"{len(self.issues)} validation issue(s): {lines}")
