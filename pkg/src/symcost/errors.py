"""Exception hierarchy shared by every module."""


class SymcostError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(SymcostError, ValueError):
    pass


class NonHermitianInput(SymcostError, ValueError):
    pass


class NotPositiveSemidefinite(SymcostError, ValueError):
    pass


class NormalizationError(SymcostError, ValueError):
    pass


class NoConvergence(SymcostError, RuntimeError):
    pass


class NotConverged(NoConvergence):
    """An iterative optimizer hit its iteration cap before meeting its tolerance."""


class NegativeInput(SymcostError, ValueError):
    pass


class PreconditionViolated(SymcostError, ValueError):
    pass


class ClosureViolation(SymcostError, ValueError):
    """Multiplication table does not describe a group."""


class HomomorphismViolation(SymcostError, ValueError):
    """Unitaries do not multiply according to the group table."""

    def __init__(self, message, worst_pair=None, deviation=None):
        super().__init__(message)
        self.worst_pair = worst_pair
        self.deviation = deviation


class NonUnitaryElement(SymcostError, ValueError):
    pass


class NonUnitaryInput(SymcostError, ValueError):
    pass


class NotSymmetryPreserving(SymcostError, ValueError):
    pass


class DimensionCapExceeded(SymcostError, ValueError):
    pass


class ConfigError(SymcostError, ValueError):
    """Invalid experiment configuration; ``location`` names the offending field."""

    def __init__(self, message, location=None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)
