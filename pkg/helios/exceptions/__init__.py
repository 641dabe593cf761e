"""
Custom exceptions for the helios library.

This module defines a hierarchy of exceptions for the stages of the solar
adaptation pipeline: ingestion, preprocessing, numerics, model persistence,
training, adaptation, baselines and evaluation.
"""


class HeliosError(Exception):
    """Base exception class for all helios errors."""
    pass


class ConfigurationError(HeliosError):
    """Raised when there is an error in configuration parameters."""
    pass


class ValidationError(HeliosError):
    """Raised when input data violates an operation's preconditions."""
    pass


class DataFormatError(HeliosError):
    """Raised when a file or payload cannot be decoded."""
    pass


class IngestionError(DataFormatError):
    """Raised when a CSV time series cannot be parsed.

    Attributes:
        line: 1-based line number in the source file, when known
    """

    def __init__(self, message: str, line: int = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CheckpointError(DataFormatError):
    """Raised when a checkpoint fails version, checksum or schema checks."""
    pass


class PreprocessingError(HeliosError):
    """Base class for preprocessing-related errors."""
    pass


class ResamplingError(PreprocessingError):
    """Raised when a time series cannot be resampled."""
    pass


class AlignmentError(PreprocessingError):
    """Raised when weather and solar frames cannot be joined."""
    pass


class BinningError(PreprocessingError):
    """Raised when power values cannot be binned into classes."""
    pass


class StandardizationError(PreprocessingError):
    """Raised when feature standardization fails."""
    pass


class FeatureSelectionError(PreprocessingError):
    """Raised when feature importance or selection fails."""
    pass


class NumericsError(HeliosError):
    """Base class for tensor and autodiff errors."""
    pass


class ShapeError(NumericsError):
    """Raised when tensor shapes are incompatible for an operation."""
    pass


class GradientError(NumericsError):
    """Raised when a backward pass or optimizer step cannot proceed."""
    pass


class TrainingError(HeliosError):
    """Raised when source training cannot proceed."""
    pass


class AdaptationError(HeliosError):
    """Raised when target adaptation cannot proceed."""
    pass


class SourceFreeViolation(AdaptationError):
    """Raised when a checkpoint carries sample-bearing fields."""
    pass


class BaselineError(HeliosError):
    """Raised when a tree ensemble cannot be fitted or used."""
    pass


class EvaluationError(HeliosError):
    """Raised when metrics cannot be computed."""
    pass
