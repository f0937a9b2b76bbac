"""Exception types raised across the toolkit."""


class FailmapError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(FailmapError):
    """Column-role schema is missing required roles or names unknown columns."""


class ParseError(FailmapError):
    """A cell in the input file could not be parsed as a number."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class ValidationError(FailmapError):
    """Input data violates a structural requirement (NaN/Inf, bad shapes)."""


class InsufficientDataError(ValidationError):
    """Too few rows for the requested statistic."""


class ConfigError(FailmapError):
    """Invalid configuration value or inconsistent spec combination."""


class DegenerateDataError(FailmapError):
    """Data admits no meaningful answer (all rows identical, single-class labels)."""


class SelectionError(FailmapError):
    """A manual node selection referenced unknown nodes or was empty."""


class InputError(FailmapError):
    """A prediction-time input does not match the trained model's shape."""


class CellTooLargeError(FailmapError):
    """A cover cell exceeds the configured pairwise-distance size limit."""


class StageError(FailmapError):
    """A pipeline stage failed; carries the stage name and the original cause."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
