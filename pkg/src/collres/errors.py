"""Exception and warning classes used across the package."""


class CollresError(Exception):
    """Base class for errors raised by collres."""


class DomainError(CollresError, ValueError):
    """An argument lies outside the domain of the operation."""


class DimensionError(CollresError, ValueError):
    pass


class ScatteringSolverError(CollresError, ArithmeticError):
    """The channel matching system could not be solved at some energy."""

    def __init__(self, energy, message="singular matching system"):
        self.energy = energy
        super().__init__(f"{message} at E = {energy!r}")


class DegenerateSpectrumError(CollresError, ArithmeticError):
    pass


class ConfigError(CollresError, ValueError):
    """Invalid experiment configuration; ``field`` names the offending entry."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class QuadratureWarning(UserWarning):
    pass


class PositivityWarning(UserWarning):
    pass
