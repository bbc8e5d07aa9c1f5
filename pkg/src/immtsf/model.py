"""Reference forecaster, full multimodal pipeline, and the training loop.

The numeric forecaster is a direct linear map in the DLinear spirit: the
aligned window is feature-expanded, flattened, and one weight row per
variable produces its level, with a per-query-row bias on top. The
multimodal pipeline then runs timestamp-to-text fusion to get one context
vector per query row and multimodality fusion to correct the numeric
forecast with it.

All losses and reported errors live in normalized target space; the
normalization statistics ride along in the pipeline so raw windows can be
fed directly. Training is Adam on masked MSE with early stopping on
validation loss, returning the best-validation parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .align import AlignedWindow, align, feature_expand
from .exceptions import InputError, MetricError, TrainingError
from .kernels import AdamState, GruParams, Params, Time2VecParams, adam_step, init_uniform
from .mmf import (
    DEFAULT_HIDDEN,
    DEFAULT_KAPPA,
    GrAddParams,
    MmfConfig,
    XAttnAddParams,
    gr_add_backward,
    gr_add_forward,
    init_gr_add,
    init_xattn_add,
    xattn_add_backward,
    xattn_add_forward,
)
from .series import ForecastWindow, IrregularSeries, VariableTrack
from .ttf import (
    DEFAULT_SIGMA,
    DEFAULT_TIME_DIM,
    T2VXAttnParams,
    TtfConfig,
    init_t2v_xattn,
    recavg,
    t2v_xattn_backward,
    t2v_xattn_forward,
)


# ---------------------------------------------------------------------------
# Pipeline container


@dataclass
class Pipeline:
    """Everything needed to forecast: dims, configs, params, normalization."""

    resolution: int
    variable_names: tuple[str, ...]
    embed_dim: int
    ttf_config: TtfConfig
    mmf_config: MmfConfig
    params: Params
    offset: np.ndarray
    scale: np.ndarray
    use_text: bool = True

    @property
    def n_variables(self) -> int:
        return len(self.variable_names)

    @property
    def feature_width(self) -> int:
        return 2 * self.n_variables + 1


def init_pipeline(
    resolution,
    variable_names,
    embed_dim,
    ttf_config: TtfConfig,
    mmf_config: MmfConfig,
    seed=0,
    offset=None,
    scale=None,
    use_text=True,
) -> Pipeline:
    """Seeded parameter initialization for every pipeline component."""
    if resolution < 1:
        raise InputError(f"resolution must be >= 1, got {resolution}")
    if embed_dim < 1:
        raise InputError(f"embed_dim must be >= 1, got {embed_dim}")
    n = len(variable_names)
    if n < 1:
        raise InputError("need at least one variable")
    rng = np.random.default_rng(seed)
    flat_width = resolution * (2 * n + 1)
    params: Params = {
        "forecaster.weight": init_uniform((n, flat_width), flat_width, rng),
        "forecaster.bias": np.zeros((resolution, n)),
    }
    context_dim = embed_dim
    if ttf_config.variant == "t2v_xattn":
        ttf_params = init_t2v_xattn(embed_dim, ttf_config.time_dim, rng)
        params.update(
            {
                "ttf.omega": ttf_params.t2v.omega,
                "ttf.bias": ttf_params.t2v.bias,
                "ttf.w_q": ttf_params.w_q,
                "ttf.w_p": ttf_params.w_p,
                "ttf.b_p": ttf_params.b_p,
            }
        )
    if mmf_config.variant == "gr_add":
        mmf_params = init_gr_add(n, context_dim, mmf_config.hidden, rng)
        for k, v in vars(mmf_params.gru).items():
            params[f"mmf.gru.{k}"] = v
        params.update(
            {
                "mmf.w_delta": mmf_params.w_delta,
                "mmf.b_delta": mmf_params.b_delta,
                "mmf.w_g": mmf_params.w_g,
                "mmf.b_g": mmf_params.b_g,
            }
        )
    else:
        mmf_params = init_xattn_add(n, context_dim, rng)
        for k, v in vars(mmf_params).items():
            params[f"mmf.{k}"] = v
    offset = np.zeros(n) if offset is None else np.asarray(offset, dtype=np.float64)
    scale = np.ones(n) if scale is None else np.asarray(scale, dtype=np.float64)
    if offset.shape != (n,) or scale.shape != (n,):
        raise InputError(f"normalization stats must have shape ({n},)")
    return Pipeline(
        resolution=int(resolution),
        variable_names=tuple(variable_names),
        embed_dim=int(embed_dim),
        ttf_config=ttf_config,
        mmf_config=mmf_config,
        params=params,
        offset=offset,
        scale=scale,
        use_text=use_text,
    )


def _ttf_params_from(params: Params) -> T2VXAttnParams:
    return T2VXAttnParams(
        t2v=Time2VecParams(omega=params["ttf.omega"], bias=params["ttf.bias"]),
        w_q=params["ttf.w_q"],
        w_p=params["ttf.w_p"],
        b_p=params["ttf.b_p"],
    )


def _mmf_params_from(params: Params, variant: str):
    if variant == "gr_add":
        gru = GruParams(**{k: params[f"mmf.gru.{k}"] for k in (
            "w_z", "u_z", "b_z", "w_r", "u_r", "b_r", "w_h", "u_h", "b_h")})
        return GrAddParams(
            gru=gru,
            w_delta=params["mmf.w_delta"],
            b_delta=params["mmf.b_delta"],
            w_g=params["mmf.w_g"],
            b_g=params["mmf.b_g"],
        )
    return XAttnAddParams(
        w_q=params["mmf.w_q"],
        w_k=params["mmf.w_k"],
        w_v=params["mmf.w_v"],
        w_res=params["mmf.w_res"],
        b_res=params["mmf.b_res"],
    )


# ---------------------------------------------------------------------------
# Window tensorization


@dataclass
class WindowTensors:
    """One window, aligned and normalized, ready for the pipeline."""

    features: np.ndarray
    query_times: np.ndarray
    target: np.ndarray
    valid: np.ndarray
    text_times: np.ndarray
    text_embeddings: np.ndarray
    empty_text: bool

    @property
    def n_queries(self) -> int:
        return self.query_times.size


def normalize_window(window: ForecastWindow, variable_names, offset, scale) -> ForecastWindow:
    """Rescale a raw window's values and targets with stored statistics."""
    if window.past.variable_names != tuple(variable_names):
        raise InputError(
            f"window variables {window.past.variable_names} != pipeline "
            f"variables {tuple(variable_names)}"
        )
    tracks = []
    targets = []
    for i, (var, q) in enumerate(zip(window.past.variables, window.query_values)):
        tracks.append(
            VariableTrack(var.name, var.times, (var.values - offset[i]) / scale[i])
        )
        targets.append((q - offset[i]) / scale[i])
    return replace(
        window,
        past=IrregularSeries(window.past.entity_id, tuple(tracks)),
        query_values=tuple(targets),
    )


def tensorize_window(window: ForecastWindow, resolution: int) -> WindowTensors:
    """Align one (already normalized) window and lay out its targets."""
    aligned = align(window, resolution)
    features = feature_expand(aligned)
    query_rows = np.flatnonzero(aligned.query_flags)
    query_times = aligned.grid_timestamps[query_rows]

    n = window.n_variables
    distinct = window.distinct_query_times()
    row_of = {float(t): i for i, t in enumerate(distinct)}
    target = np.zeros((distinct.size, n))
    valid = np.zeros((distinct.size, n))
    for col, (times, values) in enumerate(zip(window.query_times, window.query_values)):
        for t, v in zip(times, values):
            row = row_of[float(t)]
            target[row, col] = v
            valid[row, col] = 1.0

    text = window.text_past
    return WindowTensors(
        features=features,
        query_times=query_times,
        target=target,
        valid=valid,
        text_times=window.normalize_time(text.times) if len(text) else np.empty(0),
        text_embeddings=text.embeddings,
        empty_text=len(text) == 0,
    )


# ---------------------------------------------------------------------------
# Forward / backward


def forecast_unimodal(aligned: AlignedWindow, params: Params) -> np.ndarray:
    """Linear forecast at the query rows of an aligned window."""
    n_queries = int(aligned.query_flags.sum())
    if n_queries == 0:
        raise InputError("aligned window has no query rows to forecast at")
    flat = feature_expand(aligned).reshape(-1)
    base = params["forecaster.weight"] @ flat
    return base[None, :] + params["forecaster.bias"][:n_queries]


def _unimodal_forward(features: np.ndarray, n_queries: int, params: Params):
    flat = features.reshape(-1)
    base = params["forecaster.weight"] @ flat
    y_ts = base[None, :] + params["forecaster.bias"][:n_queries]
    return y_ts, flat


def _unimodal_backward(dy_ts, flat, params: Params) -> Params:
    dbias = np.zeros_like(params["forecaster.bias"])
    dbias[: dy_ts.shape[0]] = dy_ts
    return {
        "forecaster.weight": np.outer(dy_ts.sum(axis=0), flat),
        "forecaster.bias": dbias,
    }


class _TensorText:
    """Adapter exposing tensorized text under the TTF stream interface."""

    def __init__(self, times, embeddings):
        self.times = times
        self.embeddings = embeddings

    @property
    def dim(self):
        return self.embeddings.shape[1]

    def __len__(self):
        return self.times.size


def forward_window(tensors: WindowTensors, pipeline: Pipeline, params: Params):
    """Full pipeline forward on one tensorized window.

    Returns (prediction (T_f, N), cache for backward).
    """
    y_ts, flat = _unimodal_forward(tensors.features, tensors.n_queries, params)
    if not pipeline.use_text:
        return y_ts, (flat, None, None, None)

    text = _TensorText(tensors.text_times, tensors.text_embeddings)
    if pipeline.ttf_config.variant == "recavg":
        contexts, empty = recavg(text, tensors.query_times, pipeline.ttf_config.sigma)
        ttf_cache = None
    else:
        contexts, empty, ttf_cache = t2v_xattn_forward(
            text, tensors.query_times, _ttf_params_from(params)
        )
    if contexts.shape[1] != pipeline.embed_dim:
        # bypass rows are all zeros, so reshaping them to the configured
        # width is harmless; a real width mismatch is a caller bug
        if empty:
            contexts = np.zeros((tensors.n_queries, pipeline.embed_dim))
        else:
            raise InputError(
                f"text embedding dim {contexts.shape[1]} != pipeline embed_dim "
                f"{pipeline.embed_dim}"
            )

    mmf_params = _mmf_params_from(params, pipeline.mmf_config.variant)
    if pipeline.mmf_config.variant == "gr_add":
        fused, mmf_cache = gr_add_forward(y_ts, contexts, mmf_params, empty_text=empty)
    else:
        fused, mmf_cache = xattn_add_forward(
            y_ts, contexts, mmf_params, kappa=pipeline.mmf_config.kappa, empty_text=empty
        )
    return fused, (flat, ttf_cache, mmf_cache, empty)


def backward_window(dpred, cache, tensors: WindowTensors, pipeline: Pipeline, params: Params) -> Params:
    """Gradients of a scalar loss wrt every trainable pipeline parameter."""
    flat, ttf_cache, mmf_cache, empty = cache
    if not pipeline.use_text:
        return _unimodal_backward(dpred, flat, params)

    if pipeline.mmf_config.variant == "gr_add":
        mmf_grads, dy_ts, dcontexts = gr_add_backward(dpred, mmf_cache)
    else:
        mmf_grads, dy_ts, dcontexts = xattn_add_backward(dpred, mmf_cache)
    grads = {f"mmf.{k}": v for k, v in mmf_grads.items()}

    if pipeline.ttf_config.variant == "t2v_xattn":
        if ttf_cache is None:
            for key in ("omega", "bias", "w_q", "w_p", "b_p"):
                grads[f"ttf.{key}"] = np.zeros_like(params[f"ttf.{key}"])
        else:
            ttf_grads = t2v_xattn_backward(dcontexts, ttf_cache)
            grads.update({f"ttf.{k}": v for k, v in ttf_grads.items()})

    grads.update(_unimodal_backward(dy_ts, flat, params))
    return grads


def forecast_multimodal(window: ForecastWindow, pipeline: Pipeline) -> np.ndarray:
    """Forecast a raw window through the full stack, in normalized space."""
    normalized = normalize_window(
        window, pipeline.variable_names, pipeline.offset, pipeline.scale
    )
    tensors = tensorize_window(normalized, pipeline.resolution)
    pred, _ = forward_window(tensors, pipeline, pipeline.params)
    return pred


# ---------------------------------------------------------------------------
# Loss


def mse(pred, target, valid_mask) -> float:
    """Mean squared error over entries with valid_mask = 1."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    valid = np.asarray(valid_mask, dtype=np.float64)
    if pred.shape != target.shape or pred.shape != valid.shape:
        raise InputError(
            f"shape mismatch: pred {pred.shape}, target {target.shape}, mask {valid.shape}"
        )
    count = valid.sum()
    if count == 0:
        raise MetricError("masked MSE undefined: no valid entries")
    diff = (pred - target) * valid
    return float((diff * diff).sum() / count)


def _mse_grad(pred, target, valid):
    count = valid.sum()
    diff = (pred - target) * valid
    loss = float((diff * diff).sum() / count)
    return loss, 2.0 * diff / count


# ---------------------------------------------------------------------------
# Training


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 8
    patience: int = 5
    max_epochs: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise InputError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.batch_size < 1 or self.patience < 1 or self.max_epochs < 1:
            raise InputError("batch_size, patience and max_epochs must be >= 1")


@dataclass
class TrainHistory:
    train_mse: list[float] = field(default_factory=list)
    val_mse: list[float] = field(default_factory=list)
    best_epoch: int = -1
    best_val_mse: float = math.inf

    @property
    def epochs_run(self) -> int:
        return len(self.train_mse)


def evaluate_tensors(tensors: list[WindowTensors], pipeline: Pipeline, params: Params) -> float:
    """Pooled masked MSE over all valid query entries of the windows."""
    if not tensors:
        raise InputError("cannot evaluate zero windows")
    total = 0.0
    count = 0.0
    for t in tensors:
        pred, _ = forward_window(t, pipeline, params)
        diff = (pred - t.target) * t.valid
        total += float((diff * diff).sum())
        count += float(t.valid.sum())
    if count == 0:
        raise MetricError("masked MSE undefined: no valid entries")
    return total / count


def evaluate_windows(windows: list[ForecastWindow], pipeline: Pipeline) -> float:
    """Masked MSE of a pipeline over raw windows, in normalized space."""
    tensors = [
        tensorize_window(
            normalize_window(w, pipeline.variable_names, pipeline.offset, pipeline.scale),
            pipeline.resolution,
        )
        for w in windows
    ]
    return evaluate_tensors(tensors, pipeline, pipeline.params)


def train_pipeline(
    pipeline: Pipeline,
    train_windows: list[ForecastWindow],
    val_windows: list[ForecastWindow],
    config: TrainConfig = TrainConfig(),
) -> tuple[Pipeline, TrainHistory]:
    """Adam on masked MSE with early stopping on validation loss.

    Windows must already be normalized (the estimator wrapper does this);
    returns a pipeline holding the best-validation parameters.
    """
    if not train_windows or not val_windows:
        raise InputError("training needs non-empty train and validation splits")
    train_t = [tensorize_window(w, pipeline.resolution) for w in train_windows]
    val_t = [tensorize_window(w, pipeline.resolution) for w in val_windows]

    rng = np.random.default_rng(config.seed)
    state = AdamState(learning_rate=config.learning_rate)
    params = {k: v.copy() for k, v in pipeline.params.items()}
    best_params = {k: v.copy() for k, v in params.items()}
    history = TrainHistory()
    bad_epochs = 0

    for epoch in range(config.max_epochs):
        order = rng.permutation(len(train_t))
        batch_losses = []
        for b0 in range(0, len(order), config.batch_size):
            batch = order[b0 : b0 + config.batch_size]
            grads: Params = {}
            batch_loss = 0.0
            for idx in batch:
                t = train_t[idx]
                pred, cache = forward_window(t, pipeline, params)
                loss, dpred = _mse_grad(pred, t.target, t.valid)
                batch_loss += loss / batch.size
                for k, g in backward_window(
                    dpred / batch.size, cache, t, pipeline, params
                ).items():
                    if k in grads:
                        grads[k] += g
                    else:
                        grads[k] = g
            if not np.isfinite(batch_loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch} batch {b0 // config.batch_size}"
                )
            params = adam_step(params, grads, state)
            batch_losses.append(batch_loss)
        history.train_mse.append(float(np.mean(batch_losses)))

        val = evaluate_tensors(val_t, pipeline, params)
        history.val_mse.append(val)
        if val < history.best_val_mse:
            history.best_val_mse = val
            history.best_epoch = epoch
            best_params = {k: v.copy() for k, v in params.items()}
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= config.patience:
                break

    trained = replace(pipeline, params=best_params)
    return trained, history
