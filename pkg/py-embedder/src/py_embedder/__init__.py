"""Offline batch text embedding into the JSONL schema used by immtsf."""

from .embed import EmbedJob, EmbedResult, embed_file, seeded_projection
from .encoders import HashEncoder, TransformerEncoder, load_encoder
from .exceptions import EmbedderError, EncoderUnavailable, InputError

__all__ = [
    "EmbedJob",
    "EmbedResult",
    "EmbedderError",
    "EncoderUnavailable",
    "HashEncoder",
    "InputError",
    "TransformerEncoder",
    "embed_file",
    "load_encoder",
    "seeded_projection",
]
