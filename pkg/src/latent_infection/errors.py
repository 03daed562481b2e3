"""Exception types raised across the pipeline."""


class LatentInfectionError(Exception):
    """Base class for all errors raised by this package."""


class EdgeListParseError(LatentInfectionError, ValueError):
    def __init__(self, lineno: int, line: str, reason: str):
        super().__init__(f"line {lineno}: {reason}: {line!r}")
        self.lineno = lineno


class ConfigurationError(LatentInfectionError, ValueError):
    pass


class InconsistentObservationError(LatentInfectionError):
    """Observed infected nodes cannot come from a single-source SI cascade."""


class DivergenceError(LatentInfectionError, ArithmeticError):
    """The walk series sum(alpha^r A^r) does not converge."""


class NumericError(LatentInfectionError, ArithmeticError):
    pass


class UndefinedPairError(LatentInfectionError, ArithmeticError):
    pass


class FitError(LatentInfectionError, ValueError):
    pass


class ShapeError(LatentInfectionError, ValueError):
    pass


class CoverageError(LatentInfectionError, ValueError):
    pass


class UndefinedCorrelationError(LatentInfectionError, ArithmeticError):
    pass
