"""Exception types raised across the package."""


class RugoseError(Exception):
    """Base class for all package errors."""


class NonPositiveProfile(RugoseError):
    pass


class UnderResolved(RugoseError):
    pass


class NonPositiveDensity(RugoseError):
    """Density reached zero or below; carries the simulation time if known."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class WeightDegenerate(RugoseError):
    pass


class NoConvergence(RugoseError):
    def __init__(self, message, iterations, residual):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class NonPositiveData(RugoseError):
    pass


class EmptySeries(RugoseError):
    pass


class ConfigError(RugoseError):
    pass
