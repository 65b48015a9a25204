"""Exception types shared across the package."""


class FiberSenseError(Exception):
    """Base class for errors raised by this package."""


class LayoutError(FiberSenseError):
    """Fiber layout is inconsistent (gaps, overlaps, missing zones)."""


class ScenarioError(FiberSenseError):
    """Scenario script is malformed (unsorted timeline, bad command)."""


class WarmupError(FiberSenseError):
    """Operation requires a warmed-up background model."""


class StreamError(FiberSenseError):
    """Block stream is inconsistent with the detector state."""


class InsufficientDataError(FiberSenseError):
    """Not enough samples to compute the requested quantity."""


class DatasetError(FiberSenseError):
    """Labeled dataset is inconsistent."""


class ModelError(FiberSenseError):
    """Model file or model state is invalid."""


class ConfigError(FiberSenseError):
    """Service configuration is invalid."""


class ModeError(FiberSenseError):
    """Operation not available in the current service mode."""


class FormatError(FiberSenseError):
    """Binary recording is malformed.

    ``offset`` holds the byte position of the offending data when known.
    """

    def __init__(self, message, offset=None):
        super().__init__(message)
        self.offset = offset
