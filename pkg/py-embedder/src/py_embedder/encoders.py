"""Text encoders behind a single batch interface.

Every encoder exposes `dim` and `encode_batch(texts, max_tokens)` and
returns one mean-pooled vector per input text. The hashing encoder is
always available and fully deterministic; named transformer models are
loaded frozen from the local cache only, so a missing download surfaces
as EncoderUnavailable instead of a network call.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .exceptions import EncoderUnavailable

HASH_ENCODER_NAME = "hash"
HASH_ENCODER_DIM = 256


class HashEncoder:
    """Deterministic stand-in for a frozen pretrained encoder.

    Each distinct token gets a fixed pseudo-random hidden state derived
    from its hash; a text is the mean of its token states. No weights,
    no downloads, identical output on every machine.
    """

    name = HASH_ENCODER_NAME
    dim = HASH_ENCODER_DIM

    def __init__(self):
        self._token_cache: dict[str, np.ndarray] = {}

    def _token_state(self, token: str) -> np.ndarray:
        state = self._token_cache.get(token)
        if state is None:
            digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "big"))
            state = rng.standard_normal(self.dim)
            self._token_cache[token] = state
        return state

    def encode_batch(self, texts, max_tokens: int) -> np.ndarray:
        out = np.zeros((len(texts), self.dim))
        for i, text in enumerate(texts):
            tokens = text.lower().split()[:max_tokens]
            if tokens:
                out[i] = np.mean([self._token_state(t) for t in tokens], axis=0)
        return out


class TransformerEncoder:
    """Frozen pretrained model, mean-pooled over non-padding tokens."""

    def __init__(self, name: str):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise EncoderUnavailable(f"encoder {name!r} needs transformers and torch: {exc}")
        try:
            # local cache only: a cache miss must fail, not download
            self._tokenizer = AutoTokenizer.from_pretrained(name, local_files_only=True)
            self._model = AutoModel.from_pretrained(name, local_files_only=True)
        except Exception as exc:
            raise EncoderUnavailable(f"encoder {name!r} could not be loaded: {exc}")
        self._torch = torch
        self._model.eval()
        self.name = name
        self.dim = int(self._model.config.hidden_size)

    def encode_batch(self, texts, max_tokens: int) -> np.ndarray:
        batch = self._tokenizer(
            list(texts),
            padding=True,
            truncation=True,
            max_length=max_tokens,
            return_tensors="pt",
        )
        with self._torch.no_grad():
            hidden = self._model(**batch).last_hidden_state
        mask = batch["attention_mask"].unsqueeze(-1).to(hidden.dtype)
        counts = mask.sum(dim=1).clamp(min=1.0)
        pooled = (hidden * mask).sum(dim=1) / counts
        return pooled.numpy().astype(np.float64)


def load_encoder(name: str):
    if name == HASH_ENCODER_NAME:
        return HashEncoder()
    return TransformerEncoder(name)
