"""Dataset -> windows -> features -> model glue shared by the CLI and tests."""

from __future__ import annotations

import numpy as np

from .featurize import FEATURE_NAMES, WindowSpec, windows_to_xy
from .learn.forest import ForestParams, RandomForestModel, train_forest
from .sensor_data import LabeledDataset


def dataset_xy(dataset: LabeledDataset, spec: WindowSpec = WindowSpec()) -> tuple[np.ndarray, np.ndarray]:
    X, y, _ = windows_to_xy(dataset, spec)
    return X, y


def train_model(dataset: LabeledDataset, params: ForestParams = ForestParams(),
                spec: WindowSpec = WindowSpec()) -> RandomForestModel:
    """Train a forest on the windows of ``dataset``. The window geometry is
    stored in the model so the service can check incoming windows."""
    X, y = dataset_xy(dataset, spec)
    return train_forest(X, y, params, FEATURE_NAMES, extra_meta={
        "window_len_samples": spec.window_len_samples,
        "hop_samples": spec.hop_samples,
        "sample_rate_hz": dataset.sample_rate_hz,
    })
