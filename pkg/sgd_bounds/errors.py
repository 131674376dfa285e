"""
Errors Module
Exception hierarchy shared by the library and the command-line front-end
"""


class SgdBoundsError(Exception):
    """Base class for every error raised by sgd_bounds"""


class ParameterError(SgdBoundsError, ValueError):
    """A numeric parameter violates a documented bound"""


class ScheduleError(ParameterError):
    """A stepsize/weight schedule is invalid or does not match its consumer"""


class OracleConstructionError(ParameterError):
    """A problem instance cannot be built from the given data"""


class SolverDidNotConverge(OracleConstructionError):
    """The inner solve for x* ran out of its iteration budget"""


class ConfigurationError(SgdBoundsError, ValueError):
    """A campaign file or run configuration is malformed"""


class NumericalFailure(SgdBoundsError, ArithmeticError):
    """Non-finite values appeared in iterates or metrics"""


class BoundViolation(SgdBoundsError):
    """A gating bound check failed"""

    def __init__(self, message: str, cells: list = None):
        super().__init__(message)
        self.cells = cells or []
