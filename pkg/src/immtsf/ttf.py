"""Timestamp-to-text fusion: one context vector per forecast query time.

Two strategies produce e_k from the texts published at or before t_k:

* recavg: recency-weighted average with Gaussian weights
  exp(-((t_k - tau_j)/sigma)^2), no trainable parameters;
* t2v_xattn: soft attention over text embeddings augmented with a
  Time2Vec encoding of their timestamps, followed by a trainable linear
  projection back to the embedding width so both strategies present the
  same output shape.

Timestamps here are on the window-normalized scale (the same unit the
aligned grid uses), which is also the scale sigma applies to. An empty
text stream yields zero vectors plus a flag so the downstream fusion can
fall back to the numeric forecast instead of training on fabricated
context.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InputError
from .kernels import (
    Time2VecParams,
    init_time2vec,
    init_uniform,
    softmax,
    softmax_vjp,
    time2vec_backward,
    time2vec_forward,
)
from .series import TextStream

DEFAULT_SIGMA = 1.0
DEFAULT_TIME_DIM = 8

TTF_VARIANTS = ("recavg", "t2v_xattn")


@dataclass(frozen=True)
class TtfConfig:
    variant: str = "recavg"
    sigma: float = DEFAULT_SIGMA
    time_dim: int = DEFAULT_TIME_DIM

    def __post_init__(self):
        if self.variant not in TTF_VARIANTS:
            raise InputError(
                f"unknown ttf variant {self.variant!r}; expected one of {TTF_VARIANTS}"
            )
        if not self.sigma > 0:
            raise InputError(f"sigma must be positive, got {self.sigma}")
        if self.time_dim < 1:
            raise InputError(f"time_dim must be >= 1, got {self.time_dim}")


def _as_arrays(text: TextStream, query_times):
    query = np.atleast_1d(np.asarray(query_times, dtype=np.float64))
    if query.size == 0:
        raise InputError("need at least one query time")
    return text.times, text.embeddings, query


def recavg(text: TextStream, query_times, sigma: float = DEFAULT_SIGMA):
    """Gaussian recency-weighted average of admissible text embeddings.

    Returns (contexts (T_f, d), empty_flag). Texts dated after a query
    time never contribute to it.
    """
    if not sigma > 0:
        raise InputError(f"sigma must be positive, got {sigma}")
    times, emb, query = _as_arrays(text, query_times)
    contexts = np.zeros((query.size, text.dim))
    if len(text) == 0:
        return contexts, True
    for k, t_k in enumerate(query):
        admissible = times <= t_k
        if not admissible.any():
            continue
        weights = np.exp(-(((t_k - times[admissible]) / sigma) ** 2))
        contexts[k] = weights @ emb[admissible] / weights.sum()
    return contexts, False


@dataclass
class T2VXAttnParams:
    """Attention TTF parameters: time encoding, scorer, output projection."""

    t2v: Time2VecParams
    w_q: np.ndarray
    w_p: np.ndarray
    b_p: np.ndarray

    @property
    def embed_dim(self) -> int:
        return self.w_p.shape[0]

    @property
    def time_dim(self) -> int:
        return self.t2v.dim


def init_t2v_xattn(embed_dim, time_dim, rng) -> T2VXAttnParams:
    width = embed_dim + time_dim
    return T2VXAttnParams(
        t2v=init_time2vec(time_dim, rng),
        w_q=init_uniform(width, width, rng),
        w_p=init_uniform((embed_dim, width), width, rng),
        b_p=np.zeros(embed_dim),
    )


def t2v_xattn_forward(text: TextStream, query_times, params: T2VXAttnParams):
    """Soft attention over time-augmented texts, projected back to d.

    Returns (contexts (T_f, d), empty_flag, cache). Attention logits are
    w_q . [v_j ; phi(tau_j)], unscaled, softmaxed over the texts dated at
    or before each query time.
    """
    times, emb, query = _as_arrays(text, query_times)
    d = params.embed_dim
    if len(text) == 0:
        return np.zeros((query.size, d)), True, None
    if emb.shape[1] != d:
        raise InputError(f"embedding dim {emb.shape[1]} != parameter dim {d}")

    phi, t2v_cache = time2vec_forward(times, params.t2v)
    augmented = np.hstack([emb, phi])
    logits = augmented @ params.w_q

    pooled = np.zeros((query.size, augmented.shape[1]))
    attn = []
    for k, t_k in enumerate(query):
        admissible = np.flatnonzero(times <= t_k)
        if admissible.size == 0:
            attn.append((admissible, None))
            continue
        a = softmax(logits[admissible])
        pooled[k] = a @ augmented[admissible]
        attn.append((admissible, a))

    contexts = pooled @ params.w_p.T + params.b_p
    cache = (params, t2v_cache, augmented, attn, pooled)
    return contexts, False, cache


def t2v_xattn_backward(dcontexts, cache):
    """Gradients of the attention TTF wrt its trainable parameters."""
    params, t2v_cache, augmented, attn, pooled = cache
    d = params.embed_dim

    dw_p = dcontexts.T @ pooled
    db_p = dcontexts.sum(axis=0)
    dpooled = dcontexts @ params.w_p

    daug = np.zeros_like(augmented)
    dlogits = np.zeros(augmented.shape[0])
    for k, (admissible, a) in enumerate(attn):
        if a is None:
            continue
        rows = augmented[admissible]
        da = rows @ dpooled[k]
        daug[admissible] += np.outer(a, dpooled[k])
        dlogits[admissible] += softmax_vjp(a, da)

    dw_q = augmented.T @ dlogits
    daug += np.outer(dlogits, params.w_q)

    dphi = daug[:, d:]
    t2v_grads, _ = time2vec_backward(dphi, t2v_cache)
    return {
        "omega": t2v_grads["omega"],
        "bias": t2v_grads["bias"],
        "w_q": dw_q,
        "w_p": dw_p,
        "b_p": db_p,
    }
