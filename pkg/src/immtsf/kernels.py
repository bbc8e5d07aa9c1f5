"""Trainable numeric building blocks with analytic gradients.

Dense map, sigmoid/tanh/softmax, a GRU cell, scaled dot-product attention
and Time2Vec, each as a (forward returning a cache, backward consuming it)
pair in double precision. There is no general autodiff here: the fusion
blocks compose exactly these ops, and every backward is checked against
central finite differences.

Shapes follow the row convention: a sequence is (T, dim), weights are
(out_dim, in_dim), and ``x @ w.T + b`` applies the map.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InputError, TrainingError

Params = dict[str, np.ndarray]


def init_uniform(shape, fan_in, rng):
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization."""
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def sigmoid(x):
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(x, axis=-1):
    shifted = x - np.max(x, axis=axis, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=axis, keepdims=True)


def softmax_vjp(y, dy, axis=-1):
    """Backward through softmax given its output y and upstream dy."""
    return y * (dy - np.sum(dy * y, axis=axis, keepdims=True))


def dense_forward(x, w, b):
    return x @ w.T + b, (x, w)


def dense_backward(dout, cache):
    x, w = cache
    return dout @ w, dout.T @ x, dout.sum(axis=0)


# ---------------------------------------------------------------------------
# Time2Vec


@dataclass
class Time2VecParams:
    """Learnable time encoding: linear first component, sines after."""

    omega: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.omega.ndim != 1 or self.omega.shape != self.bias.shape:
            raise InputError("omega and bias must be equal-length vectors")
        if self.omega.size < 1:
            raise InputError("time encoding needs at least one component")

    @property
    def dim(self) -> int:
        return self.omega.size


def init_time2vec(dim, rng) -> Time2VecParams:
    return Time2VecParams(
        omega=init_uniform(dim, 1, rng), bias=init_uniform(dim, 1, rng)
    )


def time2vec_forward(tau, params: Time2VecParams):
    """Encode timestamps (J,) as (J, d): [w0*t + b0, sin(wi*t + bi)...]."""
    tau = np.atleast_1d(np.asarray(tau, dtype=np.float64))
    phase = np.outer(tau, params.omega) + params.bias
    out = phase.copy()
    out[:, 1:] = np.sin(phase[:, 1:])
    return out, (tau, phase, params)


def time2vec_backward(dout, cache):
    tau, phase, params = cache
    dphase = dout.copy()
    dphase[:, 1:] = dout[:, 1:] * np.cos(phase[:, 1:])
    domega = dphase.T @ tau
    dbias = dphase.sum(axis=0)
    dtau = dphase @ params.omega
    return {"omega": domega, "bias": dbias}, dtau


# ---------------------------------------------------------------------------
# GRU


@dataclass
class GruParams:
    w_z: np.ndarray
    u_z: np.ndarray
    b_z: np.ndarray
    w_r: np.ndarray
    u_r: np.ndarray
    b_r: np.ndarray
    w_h: np.ndarray
    u_h: np.ndarray
    b_h: np.ndarray

    def __post_init__(self):
        h, d = self.w_z.shape
        for name in ("w_z", "w_r", "w_h"):
            if getattr(self, name).shape != (h, d):
                raise InputError(f"{name} must have shape {(h, d)}")
        for name in ("u_z", "u_r", "u_h"):
            if getattr(self, name).shape != (h, h):
                raise InputError(f"{name} must have shape {(h, h)}")
        for name in ("b_z", "b_r", "b_h"):
            if getattr(self, name).shape != (h,):
                raise InputError(f"{name} must have shape {(h,)}")

    @property
    def input_dim(self) -> int:
        return self.w_z.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w_z.shape[0]


def init_gru(input_dim, hidden_dim, rng) -> GruParams:
    def w():
        return init_uniform((hidden_dim, input_dim), input_dim, rng)

    def u():
        return init_uniform((hidden_dim, hidden_dim), hidden_dim, rng)

    def b():
        return init_uniform(hidden_dim, hidden_dim, rng)

    return GruParams(w(), u(), b(), w(), u(), b(), w(), u(), b())


def gru_forward(inputs, params: GruParams, h0=None):
    """Run the cell over a (T, input_dim) sequence; returns (T, hidden)."""
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[1] != params.input_dim:
        raise InputError(
            f"expected inputs (T, {params.input_dim}), got {inputs.shape}"
        )
    h = np.zeros(params.hidden_dim) if h0 is None else np.asarray(h0, dtype=np.float64)
    steps = []
    hidden = np.empty((inputs.shape[0], params.hidden_dim))
    for t, x in enumerate(inputs):
        z = sigmoid(params.w_z @ x + params.u_z @ h + params.b_z)
        r = sigmoid(params.w_r @ x + params.u_r @ h + params.b_r)
        rh = r * h
        c = np.tanh(params.w_h @ x + params.u_h @ rh + params.b_h)
        h_new = (1.0 - z) * h + z * c
        steps.append((x, h, z, r, rh, c))
        hidden[t] = h_new
        h = h_new
    return hidden, (steps, params)


def gru_backward(dhidden, cache):
    """BPTT given upstream grads on every hidden state.

    Returns (param grads keyed like GruParams fields, dinputs, dh0).
    """
    steps, p = cache
    grads = {
        name: np.zeros_like(getattr(p, name))
        for name in ("w_z", "u_z", "b_z", "w_r", "u_r", "b_r", "w_h", "u_h", "b_h")
    }
    dinputs = np.zeros((len(steps), p.input_dim))
    dh_next = np.zeros(p.hidden_dim)
    for t in range(len(steps) - 1, -1, -1):
        x, h_prev, z, r, rh, c = steps[t]
        dh = dhidden[t] + dh_next
        dz = dh * (c - h_prev) * z * (1.0 - z)
        dc = dh * z * (1.0 - c * c)
        dh_prev = dh * (1.0 - z)

        grads["w_h"] += np.outer(dc, x)
        grads["u_h"] += np.outer(dc, rh)
        grads["b_h"] += dc
        drh = p.u_h.T @ dc
        dr = drh * h_prev * r * (1.0 - r)
        dh_prev += drh * r

        grads["w_z"] += np.outer(dz, x)
        grads["u_z"] += np.outer(dz, h_prev)
        grads["b_z"] += dz
        grads["w_r"] += np.outer(dr, x)
        grads["u_r"] += np.outer(dr, h_prev)
        grads["b_r"] += dr

        dh_prev += p.u_z.T @ dz + p.u_r.T @ dr
        dinputs[t] = p.w_z.T @ dz + p.w_r.T @ dr + p.w_h.T @ dc
        dh_next = dh_prev
    return grads, dinputs, dh_next


# ---------------------------------------------------------------------------
# Attention


def attention_forward(q, k, v, scale=None, n_heads=1):
    """softmax(q k^T * scale) v, optionally split over column heads."""
    q, k, v = (np.asarray(a, dtype=np.float64) for a in (q, k, v))
    if k.shape[0] == 0:
        raise InputError("attention requires at least one key/value row")
    if k.shape[0] != v.shape[0]:
        raise InputError(f"key rows {k.shape[0]} != value rows {v.shape[0]}")
    if q.shape[1] != k.shape[1]:
        raise InputError(f"query dim {q.shape[1]} != key dim {k.shape[1]}")
    d = q.shape[1]
    if d % n_heads or v.shape[1] % n_heads:
        raise InputError(f"dims {d}/{v.shape[1]} not divisible by {n_heads} heads")
    if scale is None:
        scale = 1.0 / np.sqrt(d // n_heads)

    outs, heads = [], []
    for i in range(n_heads):
        qs = q[:, i * (d // n_heads) : (i + 1) * (d // n_heads)]
        ks = k[:, i * (d // n_heads) : (i + 1) * (d // n_heads)]
        vs = v[:, i * (v.shape[1] // n_heads) : (i + 1) * (v.shape[1] // n_heads)]
        attn = softmax(qs @ ks.T * scale, axis=-1)
        outs.append(attn @ vs)
        heads.append((qs, ks, vs, attn))
    return np.hstack(outs), (heads, scale, q.shape, v.shape)


def attention_backward(dout, cache):
    heads, scale, q_shape, v_shape = cache
    n_heads = len(heads)
    dq = np.empty(q_shape)
    dk = np.empty((v_shape[0], q_shape[1]))
    dv = np.empty(v_shape)
    dh, vh = q_shape[1] // n_heads, v_shape[1] // n_heads
    for i, (qs, ks, vs, attn) in enumerate(heads):
        douts = dout[:, i * vh : (i + 1) * vh]
        dattn = douts @ vs.T
        dvs = attn.T @ douts
        dlogits = softmax_vjp(attn, dattn) * scale
        dq[:, i * dh : (i + 1) * dh] = dlogits @ ks
        dk[:, i * dh : (i + 1) * dh] = dlogits.T @ qs
        dv[:, i * vh : (i + 1) * vh] = dvs
    return dq, dk, dv


def attention(q, k, v, scale=None, n_heads=1):
    out, _ = attention_forward(q, k, v, scale=scale, n_heads=n_heads)
    return out


# ---------------------------------------------------------------------------
# Adam


@dataclass
class AdamState:
    """Bias-corrected Adam accumulator over a named parameter dict."""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)


def adam_step(params: Params, grads: Params, state: AdamState) -> Params:
    """One in-place-free update; returns new params, mutates state."""
    if set(grads) - set(params):
        raise InputError(f"gradients for unknown parameters: {sorted(set(grads) - set(params))}")
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient for parameter {name!r}")
        if g.shape != params[name].shape:
            raise InputError(
                f"gradient shape {g.shape} != parameter shape {params[name].shape} for {name!r}"
            )
    state.step += 1
    t = state.step
    out = dict(params)
    for name, g in grads.items():
        m = state.m.get(name, np.zeros_like(g))
        v = state.v.get(name, np.zeros_like(g))
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        state.m[name] = m
        state.v[name] = v
        m_hat = m / (1.0 - state.beta1**t)
        v_hat = v / (1.0 - state.beta2**t)
        out[name] = params[name] - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return out


# ---------------------------------------------------------------------------
# Gradient checking


def numeric_gradient(f, params: Params, step=1e-5) -> Params:
    """Central-difference gradient of a scalar function of a param dict."""
    grads = {}
    for name, value in params.items():
        g = np.zeros_like(value, dtype=np.float64)
        flat = value.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            hi = f(params)
            flat[i] = orig - step
            lo = f(params)
            flat[i] = orig
            gflat[i] = (hi - lo) / (2.0 * step)
        grads[name] = g
    return grads


def grad_check(f, params: Params, step=1e-5) -> float:
    """Max relative error |analytic - numeric| / max(1, |numeric|).

    `f(params)` must return (scalar loss, analytic grads dict). The loss
    is rechecked pointwise with central differences at the given step.
    """
    loss, analytic = f(params)
    if not np.isfinite(loss):
        raise TrainingError(f"gradient check at a non-finite loss: {loss}")
    numeric = numeric_gradient(lambda p: f(p)[0], params, step=step)
    worst = 0.0
    for name in params:
        a = np.asarray(analytic[name], dtype=np.float64)
        n = numeric[name]
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(n))):
            raise TrainingError(f"non-finite gradient for {name!r} during check")
        err = np.abs(a - n) / np.maximum(1.0, np.abs(n))
        worst = max(worst, float(err.max()) if err.size else 0.0)
    return worst
