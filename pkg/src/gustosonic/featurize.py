"""Fixed-length windowing and time-domain window features.

A window is 200 samples by default (4 s at 50 Hz), which is also the
prediction and sound-triggering cadence. Each window becomes a 44-value
feature vector: seven statistics for each of the six channels plus the mean
and standard deviation of the acceleration magnitude.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpec, SchemaMismatch
from .sensor_data import CHANNELS, LABELS, ActivityLabel, LabeledDataset

CHANNEL_STATS = ("mean", "std", "min", "max", "rms", "zero_crossings", "mean_abs_diff")
FEATURE_NAMES: tuple[str, ...] = tuple(
    f"{ch}_{stat}" for ch in CHANNELS for stat in CHANNEL_STATS
) + ("acc_mag_mean", "acc_mag_std")
N_FEATURES = len(FEATURE_NAMES)


@dataclass(frozen=True)
class WindowSpec:
    window_len_samples: int = 200
    hop_samples: int = 200

    def __post_init__(self):
        if self.window_len_samples < 1:
            raise InvalidSpec("window_len_samples must be >= 1")
        if not 1 <= self.hop_samples <= self.window_len_samples:
            raise InvalidSpec("hop_samples must lie in [1, window_len_samples]")

    def count(self, n_samples: int) -> int:
        if n_samples < self.window_len_samples:
            return 0
        return (n_samples - self.window_len_samples) // self.hop_samples + 1


@dataclass(frozen=True)
class SampleWindow:
    values: np.ndarray
    """(window_len, 6) channel matrix."""
    start_ms: int
    label: ActivityLabel | None = None
    start_index: int = 0

    def __len__(self):
        return len(self.values)


def modal_label(label_indices: np.ndarray) -> ActivityLabel:
    """Most frequent label; ties go to the earliest label in enum order."""
    counts = np.bincount(label_indices, minlength=len(LABELS))
    return LABELS[int(np.argmax(counts))]


def segment(dataset: LabeledDataset, spec: WindowSpec = WindowSpec()) -> list[SampleWindow]:
    """Slice the sample stream into consecutive windows.

    The trailing partial window is dropped.
    """
    n = len(dataset)
    windows = []
    for k in range(spec.count(n)):
        lo = k * spec.hop_samples
        hi = lo + spec.window_len_samples
        windows.append(SampleWindow(
            values=dataset.values[lo:hi],
            start_ms=int(dataset.timestamps[lo]),
            label=modal_label(dataset.labels[lo:hi]),
            start_index=lo,
        ))
    return windows


def _features_batch(x: np.ndarray) -> np.ndarray:
    """Feature matrix for a (n_windows, window_len, 6) stack."""
    n = x.shape[0]
    mean = x.mean(axis=1)
    std = x.std(axis=1)
    centred = x - mean[:, None, :]
    sign = np.sign(centred)
    crossings = (sign[:, 1:, :] * sign[:, :-1, :] < 0).sum(axis=1)
    per_channel = np.stack([
        mean,
        std,
        x.min(axis=1),
        x.max(axis=1),
        np.sqrt((x * x).mean(axis=1)),
        crossings.astype(np.float64),
        np.abs(np.diff(x, axis=1)).mean(axis=1) if x.shape[1] > 1 else np.zeros((n, 6)),
    ], axis=2)  # (n, 6 channels, 7 stats)
    mag = np.sqrt((x[:, :, :3] ** 2).sum(axis=2))
    return np.concatenate([per_channel.reshape(n, -1), mag.mean(axis=1)[:, None], mag.std(axis=1)[:, None]], axis=1)


def extract_features(window: SampleWindow | np.ndarray) -> np.ndarray:
    values = window.values if isinstance(window, SampleWindow) else np.asarray(window, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != 6 or len(values) == 0:
        raise SchemaMismatch(f"window must be (n, 6), got {values.shape}")
    return _features_batch(values[None, :, :])[0]


def feature_matrix(windows: list[SampleWindow]) -> np.ndarray:
    """Stack features for many windows at once (same result as per-window calls)."""
    if not windows:
        return np.empty((0, N_FEATURES))
    return _features_batch(np.stack([w.values for w in windows]))


def windows_to_xy(dataset: LabeledDataset, spec: WindowSpec = WindowSpec()):
    """Segment and featurize; returns ``(X, y, windows)`` with ``y`` as label indices."""
    windows = segment(dataset, spec)
    X = feature_matrix(windows)
    y = np.array([w.label.index for w in windows], dtype=np.int64)
    return X, y, windows
