"""Forecasting for irregularly sampled series paired with asynchronous text.

The public surface: domain types (IrregularSeries, TextStream,
ForecastWindow), windowing and chronological splitting, irregularity
profiling, canonical pre-alignment, the fusion blocks, and the
MultimodalForecaster estimator with its training harness.
"""

from .align import AlignedWindow, CanonicalAligner, align, compute_global_resolution, feature_expand
from .estimator import MultimodalForecaster
from .exceptions import (
    AmbiguityError,
    CapacityError,
    ImmtsfError,
    InputError,
    MetricError,
    SplitError,
    TrainingError,
)
from .kernels import (
    AdamState,
    GruParams,
    Time2VecParams,
    adam_step,
    attention,
    attention_backward,
    attention_forward,
    grad_check,
    gru_backward,
    gru_forward,
    init_gru,
    init_time2vec,
    numeric_gradient,
    time2vec_backward,
    time2vec_forward,
)
from .io import (
    DatasetManifest,
    HashEmbedder,
    hash_embed,
    load_dataset,
    load_manifest,
    load_numeric,
    load_pipeline,
    load_text,
    save_numeric,
    save_pipeline,
    save_text,
)
from .mmf import MmfConfig
from .model import (
    Pipeline,
    TrainConfig,
    TrainHistory,
    evaluate_windows,
    forecast_multimodal,
    forecast_unimodal,
    init_pipeline,
    mse,
    train_pipeline,
)
from .profiling import (
    IrregularityProfile,
    feature_entropy,
    mean_ioi,
    profile_dataset,
    temporal_entropy,
)
from .series import (
    ForecastWindow,
    IrregularSeries,
    Observation,
    SplitAssignment,
    TextRecord,
    TextStream,
    VariableTrack,
    WindowSpec,
    epoch_seconds,
)
from .synth import SynthSpec, generate
from .ttf import TtfConfig, recavg
from .windows import WindowScaler, chronological_split, extract_windows, split_dataset

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "AlignedWindow",
    "AmbiguityError",
    "CanonicalAligner",
    "CapacityError",
    "DatasetManifest",
    "ForecastWindow",
    "GruParams",
    "HashEmbedder",
    "ImmtsfError",
    "InputError",
    "IrregularSeries",
    "IrregularityProfile",
    "MetricError",
    "MmfConfig",
    "MultimodalForecaster",
    "Observation",
    "Pipeline",
    "SplitAssignment",
    "SplitError",
    "SynthSpec",
    "TextRecord",
    "TextStream",
    "Time2VecParams",
    "TrainConfig",
    "TrainHistory",
    "TrainingError",
    "TtfConfig",
    "VariableTrack",
    "WindowScaler",
    "WindowSpec",
    "adam_step",
    "align",
    "attention",
    "attention_backward",
    "attention_forward",
    "chronological_split",
    "compute_global_resolution",
    "epoch_seconds",
    "evaluate_windows",
    "extract_windows",
    "feature_entropy",
    "feature_expand",
    "forecast_multimodal",
    "forecast_unimodal",
    "generate",
    "grad_check",
    "gru_backward",
    "gru_forward",
    "hash_embed",
    "init_gru",
    "init_pipeline",
    "init_time2vec",
    "load_dataset",
    "load_manifest",
    "load_numeric",
    "load_pipeline",
    "load_text",
    "mean_ioi",
    "mse",
    "numeric_gradient",
    "profile_dataset",
    "recavg",
    "time2vec_backward",
    "time2vec_forward",
    "save_numeric",
    "save_pipeline",
    "save_text",
    "split_dataset",
    "temporal_entropy",
    "train_pipeline",
]
