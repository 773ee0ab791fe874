"""
Exception types shared by the encryption pipeline.

Every error raised on purpose by the library derives from QkdImageError, so the
command-line layer can turn any of them into a single machine-parsable line.
"""


class QkdImageError(Exception):
    """Base class. ``hint`` is an optional remediation shown by the CLI."""

    def __init__(self, message, hint=None):
        super().__init__(message)
        self.hint = hint


class ParameterError(QkdImageError, ValueError):
    pass


class KeyLengthError(ParameterError):
    pass


class ShapeError(QkdImageError, ValueError):
    pass


class KeystreamLengthError(QkdImageError, ValueError):
    pass


class DivergenceError(QkdImageError, ArithmeticError):
    """A chaotic orbit left its bounded region at ``iteration`` (1-based)."""

    def __init__(self, message, iteration, hint=None):
        super().__init__(message, hint=hint)
        self.iteration = iteration


class SessionError(QkdImageError):
    pass


class InsufficientDataError(QkdImageError):
    pass


class CipherError(QkdImageError):
    """Keystream generation failed for ``layer``."""

    def __init__(self, message, layer, hint=None):
        super().__init__(message, hint=hint)
        self.layer = layer


class KeyMismatchError(QkdImageError):
    pass


class UndefinedMetricError(QkdImageError, ValueError):
    pass


class ImageFormatError(QkdImageError, ValueError):
    """Malformed image content; ``offset`` is the byte position of the problem."""

    def __init__(self, message, offset=None, hint=None):
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message, hint=hint)
        self.offset = offset


class DatasetError(QkdImageError):
    pass


class PathError(QkdImageError, FileNotFoundError):
    pass


class DegenerateLayerWarning(UserWarning):
    """A keystream layer is constant and contributes nothing to the mask."""


class DatasetWarning(UserWarning):
    """A dataset file could not be read and was skipped."""
