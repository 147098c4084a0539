"""Seeded generative models of earbud IMU streams for the five activities.

Signal sketch per class (all on top of a gravity baseline of (0, -1, 0) g and
white sensor noise):

* crunchy  - chewing bouts at 1.5-2.2 chews/s; each chew is a strong,
  high-pitched (8-14 Hz) vibration burst plus a jaw-rotation swing on gyro.
* soft     - chewing bouts at 0.8-1.4 chews/s with weaker, lower-pitched
  (3-7 Hz) bursts.
* beverage - slow head sway on gyro, a tilt excursion for every sip
  (rotating gravity), and a short swallow burst after each sip.
* speaking - continuous band-limited jitter modulated at syllable rate.
* idle     - baseline and noise only.

The parameters are invented; they make the classes separable but
overlapping so that classifier comparisons stay meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidDuration, InvalidSpec
from .sensor_data import LABELS, MOUTH_ACTIVITIES, ActivityLabel, LabeledDataset

GRAVITY = np.array([0.0, -1.0, 0.0])
ACCEL_NOISE_G = 0.01
GYRO_NOISE_DPS = 0.6


@dataclass(frozen=True)
class ActivityModel:
    """Signal parameters for one activity. Ranges are (lo, hi) and drawn
    uniformly per bout or per event."""

    chew_rate_hz: tuple[float, float] = (0.0, 0.0)
    vibration_hz: tuple[float, float] = (0.0, 0.0)
    accel_amp_g: tuple[float, float] = (0.0, 0.0)
    gyro_amp_dps: tuple[float, float] = (0.0, 0.0)
    bout_s: tuple[float, float] = (1.0, 1.0)
    pause_s: tuple[float, float] = (0.0, 0.0)
    gravity: tuple[float, float, float] = (0.0, -1.0, 0.0)
    noise_floor: float = 1.0
    """Multiplier on the sensor noise level."""

    def __post_init__(self):
        for name in ("chew_rate_hz", "vibration_hz", "accel_amp_g", "gyro_amp_dps", "bout_s", "pause_s"):
            lo, hi = getattr(self, name)
            if lo < 0 or lo > hi:
                raise InvalidSpec(f"{name} must satisfy 0 <= lo <= hi, got {(lo, hi)}")
        if self.noise_floor < 0:
            raise InvalidSpec("noise_floor must be nonnegative")


DEFAULT_MODELS: dict[ActivityLabel, ActivityModel] = {
    ActivityLabel.CRUNCHY_FOOD: ActivityModel(
        chew_rate_hz=(1.5, 2.2), vibration_hz=(8.0, 14.0), accel_amp_g=(0.10, 0.30),
        gyro_amp_dps=(10.0, 30.0), bout_s=(5.0, 14.0), pause_s=(1.0, 4.0)),
    ActivityLabel.SOFT_FOOD: ActivityModel(
        chew_rate_hz=(0.8, 1.4), vibration_hz=(3.0, 7.0), accel_amp_g=(0.05, 0.18),
        gyro_amp_dps=(5.0, 18.0), bout_s=(5.0, 14.0), pause_s=(1.0, 4.0)),
    ActivityLabel.BEVERAGE: ActivityModel(
        chew_rate_hz=(0.15, 0.35), vibration_hz=(8.0, 12.0), accel_amp_g=(0.03, 0.10),
        gyro_amp_dps=(15.0, 40.0), bout_s=(1.5, 2.5), pause_s=(4.0, 10.0)),
    ActivityLabel.SPEAKING: ActivityModel(
        chew_rate_hz=(3.0, 5.0), vibration_hz=(2.0, 10.0), accel_amp_g=(0.02, 0.06),
        gyro_amp_dps=(3.0, 9.0), bout_s=(3.0, 10.0), pause_s=(0.3, 1.2)),
    ActivityLabel.IDLE: ActivityModel(),
}


@dataclass(frozen=True)
class GeneratorSpec:
    participants: int = 6
    minutes_per_activity: float = 3.0
    sample_rate_hz: float = 50.0
    activities: tuple[ActivityLabel, ...] = MOUTH_ACTIVITIES
    seed: int = 0
    noise_scale: float = 1.0
    participant_jitter: float = 0.25
    """Relative spread of per-participant amplitude and rate scaling."""

    def __post_init__(self):
        if self.participants < 1:
            raise InvalidSpec("participants must be >= 1")
        if not self.minutes_per_activity > 0:
            raise InvalidSpec("minutes_per_activity must be positive")
        if not self.sample_rate_hz > 0:
            raise InvalidSpec("sample_rate_hz must be positive")
        if not self.activities:
            raise InvalidSpec("at least one activity is required")
        if len(set(self.activities)) != len(self.activities):
            raise InvalidSpec("activities must be distinct")
        if self.noise_scale < 0:
            raise InvalidSpec("noise_scale must be nonnegative")
        if not 0 <= self.participant_jitter < 1:
            raise InvalidSpec("participant_jitter must lie in [0, 1)")

    def expected_records(self) -> int:
        per_segment = round(self.minutes_per_activity * 60 * self.sample_rate_hz)
        return self.participants * len(self.activities) * per_segment


def _uniform(rng, bounds):
    return rng.uniform(bounds[0], bounds[1]) if bounds[1] > bounds[0] else bounds[0]


def _bouts(n: int, rate: float, model: ActivityModel, rng) -> list[tuple[int, int]]:
    """Alternating active/pause schedule as (start, stop) sample ranges of
    the active parts. Starts at a random phase of the cycle."""
    spans = []
    t = -rng.uniform(0, model.bout_s[1] + model.pause_s[1]) * rate
    while t < n:
        length = _uniform(rng, model.bout_s) * rate
        lo, hi = max(0, int(t)), min(n, int(t + length))
        if hi > lo:
            spans.append((lo, hi))
        t += length + _uniform(rng, model.pause_s) * rate
    return spans


def _chewing(n, rate, model, rng):
    acc = np.zeros((n, 3))
    gyr = np.zeros((n, 3))
    for lo, hi in _bouts(n, rate, model, rng):
        m = hi - lo
        t = np.arange(m) / rate
        chew = _uniform(rng, model.chew_rate_hz)
        # slow drift of the chewing rhythm within a bout
        inst = chew * (1 + 0.08 * np.cumsum(rng.normal(0, 1, m)) / np.sqrt(np.arange(1, m + 1)))
        phase = 2 * np.pi * np.cumsum(inst) / rate
        envelope = np.maximum(0.0, np.sin(phase)) ** 2
        vib = np.sin(2 * np.pi * _uniform(rng, model.vibration_hz) * t + rng.uniform(0, 2 * np.pi))
        a_amp = _uniform(rng, model.accel_amp_g)
        g_amp = _uniform(rng, model.gyro_amp_dps)
        direction = rng.normal(0, 1, 3)
        direction /= np.linalg.norm(direction)
        acc[lo:hi] += a_amp * (envelope * vib)[:, None] * np.array([0.6, 0.3, 1.0])
        acc[lo:hi] += 0.3 * a_amp * np.sin(phase)[:, None] * direction
        gyr[lo:hi] += g_amp * np.sin(phase)[:, None] * np.array([1.0, 0.35, 0.2])
        gyr[lo:hi] += 0.4 * g_amp * (envelope * vib)[:, None] * np.array([0.5, 1.0, 0.6])
    return acc, gyr


def _beverage(n, rate, model, rng):
    acc = np.zeros((n, 3))
    gyr = np.zeros((n, 3))
    t = np.arange(n) / rate
    sway_hz = rng.uniform(0.15, 0.35)
    gyr[:, 0] += rng.uniform(2.0, 6.0) * np.sin(2 * np.pi * sway_hz * t + rng.uniform(0, 2 * np.pi))
    gyr[:, 2] += rng.uniform(1.0, 3.0) * np.sin(2 * np.pi * 0.7 * sway_hz * t + rng.uniform(0, 2 * np.pi))
    pitch = np.zeros(n)
    for lo, hi in _bouts(n, rate, model, rng):
        m = hi - lo
        # head tilts back and returns: pitch follows a raised-cosine bump
        peak = np.deg2rad(rng.uniform(15, 35)) * _uniform(rng, model.gyro_amp_dps) / 30.0
        pitch[lo:hi] += peak * 0.5 * (1 - np.cos(2 * np.pi * np.arange(m) / m))
        swallow = min(n, hi + int(0.6 * rate))
        k = swallow - hi
        if k > 0:
            tt = np.arange(k) / rate
            burst = np.sin(np.pi * np.arange(k) / k) * np.sin(2 * np.pi * _uniform(rng, model.vibration_hz) * tt)
            acc[hi:swallow] += _uniform(rng, model.accel_amp_g) * burst[:, None] * np.array([0.4, 0.4, 1.0])
            gyr[hi:swallow] += 3.0 * burst[:, None] * np.array([1.0, 0.5, 0.5])
    gyr[:, 0] += np.rad2deg(np.gradient(pitch) * rate)
    # rotate gravity about x by the pitch angle
    acc[:, 1] += -np.cos(pitch) + 1.0
    acc[:, 2] += np.sin(pitch)
    return acc, gyr


def _speaking(n, rate, model, rng):
    acc = np.zeros((n, 3))
    gyr = np.zeros((n, 3))
    active = np.zeros(n)
    for lo, hi in _bouts(n, rate, model, rng):
        active[lo:hi] = 1.0
    t = np.arange(n) / rate
    syllable = 0.5 + 0.5 * np.abs(np.sin(np.pi * _uniform(rng, model.chew_rate_hz) * t + rng.uniform(0, np.pi)))
    spectrum_lo, spectrum_hi = model.vibration_hz
    freqs = np.fft.rfftfreq(n, 1 / rate)
    band = (freqs >= spectrum_lo) & (freqs <= spectrum_hi)

    def jitter(scale):
        white = rng.normal(0, 1, (n, 3))
        spec = np.fft.rfft(white, axis=0) * band[:, None]
        out = np.fft.irfft(spec, n=n, axis=0)
        sd = out.std()
        return scale * out / sd if sd > 0 else out

    env = (active * syllable)[:, None]
    acc += env * jitter(_uniform(rng, model.accel_amp_g))
    gyr += env * jitter(_uniform(rng, model.gyro_amp_dps))
    return acc, gyr


_SIGNALS = {
    ActivityLabel.CRUNCHY_FOOD: _chewing,
    ActivityLabel.SOFT_FOOD: _chewing,
    ActivityLabel.BEVERAGE: _beverage,
    ActivityLabel.SPEAKING: _speaking,
}


def generate_activity(label: ActivityLabel, duration_s: float, rate_hz: float = 50.0,
                      rng: np.random.Generator | int | None = 0, noise_scale: float = 1.0,
                      model: ActivityModel | None = None, source: str = "synthgen") -> LabeledDataset:
    """One contiguous labelled segment of ``round(duration_s * rate_hz)`` samples.

    Timestamps start at 0 ms. With ``noise_scale=0`` and the default idle
    model every sample is exactly the gravity baseline.
    """
    if not duration_s > 0:
        raise InvalidDuration(f"duration must be positive, got {duration_s}")
    if not rate_hz > 0:
        raise InvalidSpec("rate_hz must be positive")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    model = model or DEFAULT_MODELS[label]
    n = round(duration_s * rate_hz)

    acc = np.tile(np.array(model.gravity, dtype=np.float64), (n, 1))
    gyr = np.zeros((n, 3))
    make = _SIGNALS.get(label)
    if make is not None:
        a, g = make(n, rate_hz, model, rng)
        acc += a
        gyr += g
    sigma = noise_scale * model.noise_floor
    if sigma > 0:
        acc += rng.normal(0, ACCEL_NOISE_G * sigma, (n, 3))
        gyr += rng.normal(0, GYRO_NOISE_DPS * sigma, (n, 3))

    timestamps = np.round(np.arange(n) * 1000.0 / rate_hz).astype(np.int64)
    return LabeledDataset(timestamps, np.hstack([acc, gyr]), np.full(n, label.index),
                          sample_rate_hz=rate_hz, source=source)


def _scale(bounds, k):
    return (bounds[0] * k, bounds[1] * k)


def participant_models(participant: int, spec: GeneratorSpec) -> dict[ActivityLabel, ActivityModel]:
    """Per-participant variation of the default models: amplitude and rate
    scaling, a head-orientation tilt of the gravity baseline, and noise."""
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(participant,)))
    j = spec.participant_jitter
    amp = rng.uniform(1 - j, 1 + j)
    rate = rng.uniform(1 - j / 2, 1 + j / 2)
    tilt = np.deg2rad(rng.normal(0, 8.0, 2)) * (1 if j > 0 else 0)
    gravity = (float(np.sin(tilt[1])), float(-np.cos(tilt[0]) * np.cos(tilt[1])), float(np.sin(tilt[0])))
    noise = rng.uniform(0.8, 1.3) if j > 0 else 1.0
    out = {}
    for label, m in DEFAULT_MODELS.items():
        out[label] = replace(
            m,
            accel_amp_g=_scale(m.accel_amp_g, amp * rng.uniform(1 - j / 2, 1 + j / 2)),
            gyro_amp_dps=_scale(m.gyro_amp_dps, amp * rng.uniform(1 - j / 2, 1 + j / 2)),
            chew_rate_hz=_scale(m.chew_rate_hz, rate),
            gravity=gravity,
            noise_floor=noise,
        )
    return out


def generate_dataset(spec: GeneratorSpec = GeneratorSpec()) -> LabeledDataset:
    """All participants x activities, each one contiguous segment.

    Every (participant, activity) segment draws from its own derived seed,
    so any segment can be regenerated independently of the others.
    """
    duration = spec.minutes_per_activity * 60.0
    parts = []
    for p in range(spec.participants):
        models = participant_models(p, spec)
        for label in spec.activities:
            rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(p, label.index)))
            parts.append(generate_activity(label, duration, spec.sample_rate_hz, rng,
                                           noise_scale=spec.noise_scale, model=models[label]))
    source = f"synthgen seed={spec.seed} participants={spec.participants}"
    return LabeledDataset.concat(parts, source=source)


def parse_activities(text: str) -> tuple[ActivityLabel, ...]:
    if text.strip().lower() == "all":
        return LABELS
    return tuple(ActivityLabel.parse(t) for t in text.split(",") if t.strip())
