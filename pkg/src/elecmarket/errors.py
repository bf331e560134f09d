"""Exception types raised across the package."""


class InvalidPlantError(ValueError):
    """A power plant violates its parameter invariants."""


class ScenarioError(ValueError):
    """A scenario file or override fails validation.

    ``field`` names the offending key path so callers can report it.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class InvalidBidError(ValueError):
    pass


class HorizonError(ValueError):
    """Forecasts do not cover the period an appraisal needs."""


class InsufficientHistoryError(ValueError):
    pass


class DegenerateDataError(ValueError):
    pass


class MetricUndefinedError(ValueError):
    """A metric is mathematically undefined for the given input."""


class InvalidStateError(RuntimeError):
    pass


class InvalidTargetError(ValueError):
    """A calibration target does not match the simulated technology set."""
