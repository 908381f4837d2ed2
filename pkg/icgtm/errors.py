"""Exception hierarchy shared by services and commands."""
from typing import Optional


class IcgtmError(Exception):
    """Base class for every error raised by the matcher."""


class ConfigError(IcgtmError, ValueError):
    """A configuration value is out of range."""


class InvariantError(IcgtmError, ValueError):
    """A domain object violates one of its invariants."""


class LoadError(IcgtmError, ValueError):
    """A correspondence or result file cannot be parsed."""

    def __init__(self, message: str, index: Optional[int] = None):
        self.index = index
        if index is not None:
            message = f"{message} at index {index}"
        super().__init__(message)


class ProjectionError(IcgtmError, ValueError):
    """Homogeneous scale vanished during a projection."""


class HomographyError(IcgtmError):
    """No homography could be estimated from the given points."""


class MetricError(IcgtmError, ValueError):
    """Metrics are undefined for the given ground truth."""


class SceneError(IcgtmError, ValueError):
    """The synthetic scene configuration cannot be realised."""


class PipelineError(IcgtmError):
    """The matching pipeline failed."""
