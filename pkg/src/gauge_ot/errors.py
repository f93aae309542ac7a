"""Exception hierarchy shared by all modules."""


class GaugeOTError(Exception):
    """Base class for library errors."""


class DegenerateDensity(GaugeOTError):
    """A density dropped below its positivity floor."""


class ShockTime(GaugeOTError):
    """Characteristics cross (or come too close to crossing) before the requested time."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class CFLError(GaugeOTError):
    """A time step was rejected because it violates the CFL bound."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class NoConvergence(GaugeOTError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, residual=None, result=None):
        super().__init__(message)
        self.residual = residual
        self.result = result


class PreconditionViolation(GaugeOTError):
    """Inputs do not satisfy a documented precondition."""


class ShapeMismatch(GaugeOTError, ValueError):
    pass


class MissingCompanion(GaugeOTError, ValueError):
    """A pgl projection was requested without the S field that fixes the representative."""
