"""Exception types shared across the toolkit."""


class ConfigError(ValueError):
    """Invalid serial, profile, or experiment configuration."""


class NoSignalError(Exception):
    """Trace carries no usable signal (empty or flat)."""


class EstimationError(Exception):
    """Not enough structure in the input to estimate a parameter."""


class FrameError(ValueError):
    """Frame size or tag constraints violated."""
