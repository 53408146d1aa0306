"""Exception types shared across the simulator."""


class RansleepError(Exception):
    """Base class for all simulator errors."""


class OutOfRangeError(RansleepError):
    """A time lies outside the simulated horizon."""


class ConfigError(RansleepError):
    """Invalid configuration (bad period alignment, empty matrix, unknown key...)."""


class MalformedTimelineError(RansleepError):
    """A state timeline has a gap or overlap and cannot be integrated."""


class IneligibleGapError(RansleepError):
    """An idle gap is below the deep-sleep qualifying threshold."""


class InfeasibleLoadError(RansleepError):
    """Requested mean PRB utilization is >= 1 and cannot be offered."""


class CalibrationError(RansleepError):
    """Closed-loop arrival-rate calibration failed to converge."""


class UnknownFeatureError(RansleepError):
    """A feature id is not present in the registry."""


class NotSimulatableError(RansleepError):
    """A plan activates a taxonomy feature that has no quantitative model."""
