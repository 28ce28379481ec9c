"""Exception types shared across the package."""


class GlanceNetError(Exception):
    """Base class for all package errors."""


class DimensionError(GlanceNetError):
    """Tensor shapes are incompatible for the requested operation."""


class ConfigError(GlanceNetError):
    """Invalid configuration value or experiment description."""


class ContractError(GlanceNetError):
    """A caller violated an operation's contract (e.g. labels supplied
    with an unlabeled batch, non-scalar loss, missing gradient)."""


class FormatError(GlanceNetError):
    """Malformed or corrupted on-disk file (checkpoint or sample)."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class UndefinedMetricError(GlanceNetError):
    """Metric is undefined for the given inputs (e.g. single-class AUC)."""


class BaselineUnavailableError(GlanceNetError):
    """A subject has no road-glance training frames to average."""


class SequencingError(GlanceNetError):
    """A multi-stage regime was invoked out of order (missing snapshot)."""
