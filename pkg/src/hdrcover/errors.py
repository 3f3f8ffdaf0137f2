"""Exception types shared across the package.

Plain ValueError is used for ordinary argument/domain violations; the classes
here mark conditions callers are expected to branch on (the CLI maps them to
distinct exit codes).
"""


class FitError(ValueError):
    """A calibration fit cannot proceed (insufficient span or samples)."""


class EstimationError(ValueError):
    """A statistical estimate has no usable input (e.g. no reliable pixels)."""


class MetricError(ValueError):
    """A quality metric is undefined for the given inputs (e.g. all-sentinel map)."""


class InfeasibleError(RuntimeError):
    """Classification cannot produce a usable instance.

    Raised when no encoded value meets the SNR threshold, or when every pixel
    of a stack is uncoverable.
    """


class ConfigError(ValueError):
    """Invalid run configuration (bad spec string, missing keys, bad combination)."""
