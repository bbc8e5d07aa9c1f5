"""Multimodality fusion: combine text contexts with the numeric forecast.

Both variants consume the numeric forecast Y_ts (T_f, N) and one text
context per query row E (T_f, d) and emit the fused forecast:

* gr_add: a GRU reads [y_k ; e_k] rows, a linear head turns its hidden
  states into a correction, and a sigmoid gate computed from the same
  rows decides per variable how much of the correction to apply:
  Y = Y_ts + (1 - G) * dY. G near 1 trusts the numeric forecast.
* xattn_add: scaled dot-product cross-attention with queries from Y_ts
  and keys/values from E produces a correction, blended with the fixed
  convex weight kappa: Y = (Y_ts + kappa * dY) / (1 + kappa).

When the window had no text at all (empty-text flag from the TTF stage)
both variants return Y_ts untouched rather than learn from fabricated
zero contexts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InputError
from .kernels import (
    GruParams,
    attention_backward,
    attention_forward,
    gru_backward,
    gru_forward,
    init_gru,
    init_uniform,
    sigmoid,
)

DEFAULT_KAPPA = 0.5
DEFAULT_HIDDEN = 16

MMF_VARIANTS = ("gr_add", "xattn_add")


@dataclass(frozen=True)
class MmfConfig:
    variant: str = "gr_add"
    hidden: int = DEFAULT_HIDDEN
    kappa: float = DEFAULT_KAPPA

    def __post_init__(self):
        if self.variant not in MMF_VARIANTS:
            raise InputError(
                f"unknown mmf variant {self.variant!r}; expected one of {MMF_VARIANTS}"
            )
        if self.hidden < 1:
            raise InputError(f"hidden must be >= 1, got {self.hidden}")
        if not (np.isfinite(self.kappa) and self.kappa >= 0):
            raise InputError(f"kappa must be finite and >= 0, got {self.kappa}")


def _check_rows(y_ts, e):
    y_ts = np.asarray(y_ts, dtype=np.float64)
    e = np.asarray(e, dtype=np.float64)
    if y_ts.ndim != 2 or e.ndim != 2:
        raise InputError("expected 2-d forecast and context matrices")
    if y_ts.shape[0] != e.shape[0]:
        raise InputError(
            f"forecast rows {y_ts.shape[0]} != context rows {e.shape[0]}"
        )
    return y_ts, e


# ---------------------------------------------------------------------------
# GR-Add


@dataclass
class GrAddParams:
    gru: GruParams
    w_delta: np.ndarray
    b_delta: np.ndarray
    w_g: np.ndarray
    b_g: np.ndarray


def init_gr_add(n_variables, embed_dim, hidden, rng) -> GrAddParams:
    width = n_variables + embed_dim
    return GrAddParams(
        gru=init_gru(width, hidden, rng),
        w_delta=init_uniform((n_variables, hidden), hidden, rng),
        b_delta=np.zeros(n_variables),
        w_g=init_uniform((n_variables, width), width, rng),
        b_g=np.zeros(n_variables),
    )


def gr_add_forward(y_ts, e, params: GrAddParams, empty_text=False):
    y_ts, e = _check_rows(y_ts, e)
    if empty_text:
        return y_ts, ("bypass", y_ts.shape, e.shape, params)
    z = np.hstack([y_ts, e])
    hidden, gru_cache = gru_forward(z, params.gru)
    delta = hidden @ params.w_delta.T + params.b_delta
    gate = sigmoid(z @ params.w_g.T + params.b_g)
    fused = y_ts + (1.0 - gate) * delta
    return fused, ("fused", y_ts.shape, z, hidden, gru_cache, delta, gate, params)


def _zero_gr_add_grads(params: GrAddParams):
    grads = {f"gru.{k}": np.zeros_like(v) for k, v in vars(params.gru).items()}
    for name in ("w_delta", "b_delta", "w_g", "b_g"):
        grads[name] = np.zeros_like(getattr(params, name))
    return grads


def gr_add_backward(dfused, cache):
    """Returns (param grads, dY_ts, dE)."""
    if cache[0] == "bypass":
        _, y_shape, e_shape, params = cache
        return _zero_gr_add_grads(params), np.asarray(dfused).copy(), np.zeros(e_shape)
    _, y_shape, z, hidden, gru_cache, delta, gate, params = cache
    n = y_shape[1]

    dgate = -dfused * delta
    ddelta = dfused * (1.0 - gate)

    dpre_gate = dgate * gate * (1.0 - gate)
    dw_g = dpre_gate.T @ z
    db_g = dpre_gate.sum(axis=0)
    dz = dpre_gate @ params.w_g

    dw_delta = ddelta.T @ hidden
    db_delta = ddelta.sum(axis=0)
    dhidden = ddelta @ params.w_delta

    gru_grads, dz_gru, _ = gru_backward(dhidden, gru_cache)
    dz += dz_gru

    grads = {f"gru.{k}": v for k, v in gru_grads.items()}
    grads.update(w_delta=dw_delta, b_delta=db_delta, w_g=dw_g, b_g=db_g)
    dy_ts = dfused + dz[:, :n]
    de = dz[:, n:]
    return grads, dy_ts, de


# ---------------------------------------------------------------------------
# XAttn-Add


@dataclass
class XAttnAddParams:
    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    w_res: np.ndarray
    b_res: np.ndarray


def init_xattn_add(n_variables, embed_dim, rng) -> XAttnAddParams:
    return XAttnAddParams(
        w_q=init_uniform((n_variables, embed_dim), n_variables, rng),
        w_k=init_uniform((embed_dim, embed_dim), embed_dim, rng),
        w_v=init_uniform((embed_dim, embed_dim), embed_dim, rng),
        w_res=init_uniform((embed_dim, n_variables), embed_dim, rng),
        b_res=np.zeros(n_variables),
    )


def xattn_add_forward(y_ts, e, params: XAttnAddParams, kappa=DEFAULT_KAPPA, empty_text=False):
    y_ts, e = _check_rows(y_ts, e)
    if empty_text:
        return y_ts, ("bypass", y_ts.shape, e.shape, params)
    q = y_ts @ params.w_q
    k = e @ params.w_k
    v = e @ params.w_v
    attended, attn_cache = attention_forward(q, k, v)
    delta = attended @ params.w_res + params.b_res
    fused = (y_ts + kappa * delta) / (1.0 + kappa)
    return fused, ("fused", y_ts, e, attended, attn_cache, kappa, params)


def _zero_xattn_add_grads(params: XAttnAddParams):
    return {name: np.zeros_like(v) for name, v in vars(params).items()}


def xattn_add_backward(dfused, cache):
    """Returns (param grads, dY_ts, dE)."""
    if cache[0] == "bypass":
        _, y_shape, e_shape, params = cache
        return _zero_xattn_add_grads(params), np.asarray(dfused).copy(), np.zeros(e_shape)
    _, y_ts, e, attended, attn_cache, kappa, params = cache

    dy_ts = dfused / (1.0 + kappa)
    ddelta = dfused * (kappa / (1.0 + kappa))

    dattended = ddelta @ params.w_res.T
    dw_res = attended.T @ ddelta
    db_res = ddelta.sum(axis=0)

    dq, dk, dv = attention_backward(dattended, attn_cache)
    dw_q = y_ts.T @ dq
    dy_ts = dy_ts + dq @ params.w_q.T
    dw_k = e.T @ dk
    dw_v = e.T @ dv
    de = dk @ params.w_k.T + dv @ params.w_v.T

    grads = {"w_q": dw_q, "w_k": dw_k, "w_v": dw_v, "w_res": dw_res, "b_res": db_res}
    return grads, dy_ts, de
