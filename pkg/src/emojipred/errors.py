"""Exception types shared across the package."""


class EmojiPredError(Exception):
    """Base class for package errors."""


class DataValidationError(EmojiPredError, ValueError):
    """Input data violates a schema or invariant (bad label, gap in mapping, ...)."""


class NonFiniteError(EmojiPredError, FloatingPointError):
    """A numeric operation produced NaN or Inf."""


class CheckpointError(EmojiPredError, ValueError):
    """Checkpoint file is malformed, truncated, or does not match its vocabulary."""
