class EmbedderError(Exception):
    """Base class for everything this package raises on purpose."""


class InputError(EmbedderError):
    """Unusable arguments or input files."""


class EncoderUnavailable(EmbedderError):
    """The requested encoder cannot be loaded in this environment."""
