"""Shared exception hierarchy."""


class TextsieveError(Exception):
    """Base class for all errors raised by this package."""


class CorpusError(TextsieveError):
    """Malformed corpus file or inconsistent corpus contents."""


class EmbedError(TextsieveError):
    """Bad vector file, configuration, or unembeddable input."""


class DetectionError(TextsieveError):
    """Invalid ranking request or inconsistent ranked lists."""


class EvalError(TextsieveError):
    """Invalid evaluation input: missing errors, mismatched classes."""


class PipelineError(TextsieveError):
    """Collection round used out of order or with invalid inputs."""


class StoreError(TextsieveError):
    """Project store missing, corrupt, or misconfigured."""
