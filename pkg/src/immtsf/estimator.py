"""High-level estimator facade over the multimodal pipeline.

MultimodalForecaster follows the familiar fit/predict shape: fit learns
normalization statistics from the training windows, fixes the global
alignment resolution, initializes seeded parameters and runs the Adam
loop with early stopping; predict forecasts raw windows and returns
values in the original units. Error metrics stay in normalized target
space, matching how training and validation losses are computed.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .align import compute_global_resolution
from .exceptions import InputError
from .mmf import DEFAULT_HIDDEN, DEFAULT_KAPPA, MmfConfig
from .model import (
    Pipeline,
    TrainConfig,
    evaluate_windows,
    forward_window,
    init_pipeline,
    normalize_window,
    tensorize_window,
    train_pipeline,
)
from .series import ForecastWindow
from .ttf import DEFAULT_SIGMA, DEFAULT_TIME_DIM, TtfConfig
from .windows import WindowScaler


class MultimodalForecaster(BaseEstimator):
    """Trainable forecaster for irregular series with asynchronous text.

    Parameters mirror the pipeline configuration: `ttf_variant` in
    {"recavg", "t2v_xattn"} with `sigma`/`time_dim`, `mmf_variant` in
    {"gr_add", "xattn_add"} with `hidden`/`kappa`, and `use_text=False`
    turns the whole text path off for a unimodal reference model.
    """

    def __init__(
        self,
        ttf_variant="recavg",
        mmf_variant="gr_add",
        sigma=DEFAULT_SIGMA,
        kappa=DEFAULT_KAPPA,
        hidden=DEFAULT_HIDDEN,
        time_dim=DEFAULT_TIME_DIM,
        use_text=True,
        learning_rate=1e-3,
        batch_size=8,
        patience=5,
        max_epochs=200,
        resolution=None,
        seed=0,
    ):
        self.ttf_variant = ttf_variant
        self.mmf_variant = mmf_variant
        self.sigma = sigma
        self.kappa = kappa
        self.hidden = hidden
        self.time_dim = time_dim
        self.use_text = use_text
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.patience = patience
        self.max_epochs = max_epochs
        self.resolution = resolution
        self.seed = seed

    # -- fitting -----------------------------------------------------------

    def fit(self, windows, y=None, validation=None):
        """Train on forecast windows; `validation` drives early stopping.

        Without an explicit validation list the chronological tail of
        `windows` (one fifth, at least one window) is held out.
        """
        windows = self._check_windows(windows)
        if validation is None:
            if len(windows) == 1:
                validation = windows
            else:
                k = max(1, len(windows) // 5)
                windows, validation = windows[:-k], windows[-k:]
        else:
            validation = self._check_windows(validation)

        self.scaler_ = WindowScaler().fit(windows)
        names = windows[0].past.variable_names
        self.variable_names_ = names
        self.offset_ = np.array([self.scaler_.offset_.get(n, 0.0) for n in names])
        self.scale_ = np.array([self.scaler_.scale_.get(n, 1.0) for n in names])

        if self.resolution is not None:
            self.resolution_ = int(self.resolution)
        else:
            self.resolution_ = compute_global_resolution(list(windows) + list(validation))

        dims = [w.text_past.dim for w in list(windows) + list(validation)]
        self.embed_dim_ = max(max(dims), 1)

        pipeline = init_pipeline(
            resolution=self.resolution_,
            variable_names=names,
            embed_dim=self.embed_dim_,
            ttf_config=TtfConfig(
                variant=self.ttf_variant, sigma=self.sigma, time_dim=self.time_dim
            ),
            mmf_config=MmfConfig(
                variant=self.mmf_variant, hidden=self.hidden, kappa=self.kappa
            ),
            seed=self.seed,
            offset=self.offset_,
            scale=self.scale_,
            use_text=self.use_text,
        )
        config = TrainConfig(
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            patience=self.patience,
            max_epochs=self.max_epochs,
            seed=self.seed,
        )
        self.pipeline_, self.history_ = train_pipeline(
            pipeline,
            self.scaler_.transform(windows),
            self.scaler_.transform(validation),
            config,
        )
        return self

    # -- inference ---------------------------------------------------------

    def predict(self, windows):
        """Forecast each window; list of (T_f, N) arrays in original units."""
        pipeline = self._fitted_pipeline()
        out = []
        for w in self._check_windows(windows):
            tensors = tensorize_window(
                normalize_window(w, pipeline.variable_names, pipeline.offset, pipeline.scale),
                pipeline.resolution,
            )
            pred, _ = forward_window(tensors, pipeline, pipeline.params)
            out.append(pred * pipeline.scale + pipeline.offset)
        return out

    def evaluate(self, windows) -> float:
        """Pooled masked MSE over the windows, in normalized space."""
        return evaluate_windows(self._check_windows(windows), self._fitted_pipeline())

    def score(self, windows, y=None) -> float:
        """Negative normalized MSE, so larger is better."""
        return -self.evaluate(windows)

    # -- helpers -----------------------------------------------------------

    def _fitted_pipeline(self) -> Pipeline:
        if not hasattr(self, "pipeline_"):
            raise NotFittedError(
                "MultimodalForecaster is not fitted yet; call fit first"
            )
        return self.pipeline_

    @staticmethod
    def _check_windows(windows):
        windows = list(windows)
        if not windows:
            raise InputError("need at least one forecast window")
        for w in windows:
            if not isinstance(w, ForecastWindow):
                raise InputError(f"expected ForecastWindow, got {type(w).__name__}")
        names = windows[0].past.variable_names
        for w in windows:
            if w.past.variable_names != names:
                raise InputError(
                    f"inconsistent variables: {w.past.variable_names} vs {names}"
                )
        return windows
