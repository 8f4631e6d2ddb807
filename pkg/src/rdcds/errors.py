"""Exception hierarchy shared across the package."""


class RDCDSError(Exception):
    """Base class for every error raised by rdcds."""


class ZeroInverse(RDCDSError, ZeroDivisionError):
    pass


class SingularMatrix(RDCDSError, ArithmeticError):
    pass


class DivideByZero(RDCDSError, ZeroDivisionError):
    pass


class ShapeMismatch(RDCDSError, ValueError):
    pass


class InvalidParams(RDCDSError, ValueError):
    pass


class FieldTooSmall(InvalidParams):
    pass


class InvalidSecurity(RDCDSError, ValueError):
    pass


class TooManyDropouts(RDCDSError, ValueError):
    pass


class ThresholdViolated(RDCDSError, ValueError):
    """Too few servers are available for the requested security level."""

    def __init__(self, required, available):
        self.required = required
        self.available = available
        super().__init__(
            f"update needs at least R_u={required} available servers, got {available}"
        )


class Infeasible(RDCDSError, ArithmeticError):
    pass


class Unbounded(RDCDSError, ArithmeticError):
    pass


class ScenarioInvalid(RDCDSError, ValueError):
    def __init__(self, event_index, reason):
        self.event_index = event_index
        self.reason = reason
        where = "scenario" if event_index is None else f"event {event_index}"
        super().__init__(f"{where}: {reason}")


class ConfigError(RDCDSError, ValueError):
    """Scenario file could not be read or parsed."""
