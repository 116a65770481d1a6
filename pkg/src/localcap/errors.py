"""Exception types shared across the package."""


class LocalcapError(Exception):
    """Base class for all package-specific errors."""


class DegenerateExtentError(LocalcapError, ValueError):
    """Map extent too small to hold a meaningful transmitter pattern."""


class SeedFailureError(LocalcapError):
    """Newton iteration failed to locate a boundary point on the seed ray."""


class TraceError(LocalcapError):
    """Base class for boundary-tracing failures."""


class OpenTraceError(TraceError):
    """The boundary walk hit the step limit without closing the loop."""


class DegenerateGradientError(TraceError):
    """The SIR gradient vanished along the traced boundary."""


class SingularEvaluationError(TraceError):
    """An evaluation point coincided with a transmitter position."""


class WindowOverflowError(LocalcapError):
    """The reception region touches the edge of the rasterization window."""


class MonteCarloFailureError(LocalcapError):
    """Too many per-sample trace failures to trust the estimate."""
