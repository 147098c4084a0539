"""Turning predicted activities into sound playback.

Each eating/drinking activity owns ten 4-second clips. Speaking and idle
produce silence. Clips are picked uniformly at random within the activity,
never repeating the clip that activity played last, and every clip ends in a
1-second linear fade-out.

Which sound family plays for which activity is a table. The default pairs
them deliberately against expectation: crunchy chip sounds for soft food,
piano chords for crunchy food, fizzing water for drinks.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from .errors import ClipTooShort, InvalidSpec
from .sensor_data import SILENT_ACTIVITIES, ActivityLabel

AUDIO_RATE = 22050
CLIP_SECONDS = 4.0
FADE_OUT_S = 1.0
CLIPS_PER_ACTIVITY = 10
SOUNDING_ACTIVITIES = (ActivityLabel.CRUNCHY_FOOD, ActivityLabel.SOFT_FOOD, ActivityLabel.BEVERAGE)

DEFAULT_FAMILY_MAP: dict[ActivityLabel, str] = {
    ActivityLabel.CRUNCHY_FOOD: "classical",
    ActivityLabel.SOFT_FOOD: "crunchy",
    ActivityLabel.BEVERAGE: "carbonated",
}


def apply_fade(clip: np.ndarray, sample_rate: int, fade_out_s: float = FADE_OUT_S) -> np.ndarray:
    """Linear gain ramp from 1 to exactly 0 across the last ``fade_out_s``.

    Samples before the ramp are returned unchanged.
    """
    clip = np.asarray(clip, dtype=np.float64)
    n_fade = int(round(fade_out_s * sample_rate))
    if n_fade < 0:
        raise ValueError("fade_out_s must be nonnegative")
    if len(clip) < n_fade:
        raise ClipTooShort(f"clip of {len(clip)} samples is shorter than a {fade_out_s} s fade")
    out = clip.copy()
    if n_fade == 0:
        return out
    if n_fade == 1:
        out[-1] = 0.0
        return out
    out[-n_fade:] *= np.linspace(1.0, 0.0, n_fade)
    return out


def spectral_centroid(samples: np.ndarray, sample_rate: int) -> float:
    mag = np.abs(np.fft.rfft(samples))
    freqs = np.fft.rfftfreq(len(samples), 1.0 / sample_rate)
    total = mag.sum()
    return float((freqs * mag).sum() / total) if total > 0 else 0.0


def _normalise(x: np.ndarray, peak: float = 0.8) -> np.ndarray:
    m = np.abs(x).max()
    return x * (peak / m) if m > 0 else x


def _crunchy(rng, n, sr):
    """Clusters of short broadband noise cracks, like biting into chips."""
    out = np.zeros(n)
    for _ in range(int(rng.integers(10, 18))):
        start = int(rng.integers(0, n - sr // 10))
        length = int(rng.integers(sr // 100, sr // 25))
        decay = np.exp(-np.arange(length) / (length / rng.uniform(3, 6)))
        crack = rng.normal(0, 1, length)
        crack = np.diff(crack, prepend=0.0)  # tilt the spectrum upward
        out[start:start + length] += rng.uniform(0.5, 1.0) * decay * crack
    return out


def _classical(rng, n, sr):
    """A soft sustained piano-like chord, re-struck once or twice."""
    t = np.arange(n) / sr
    root = 48 + int(rng.integers(0, 12))  # MIDI C3..B3
    quality = [0, 4, 7, 12] if rng.random() < 0.5 else [0, 3, 7, 12]
    out = np.zeros(n)
    for strike in sorted(rng.uniform(0, 2.0, size=int(rng.integers(1, 3)))):
        k = int(strike * sr)
        tt = t[: n - k]
        env = np.exp(-tt / rng.uniform(1.0, 2.0)) * (1 - np.exp(-tt / 0.01))
        for semis in quality:
            f = 440.0 * 2 ** ((root + semis - 69) / 12)
            for h, w in ((1, 1.0), (2, 0.35), (3, 0.12)):
                out[k:] += w * env * np.sin(2 * np.pi * f * h * tt)
    return out


def _carbonated(rng, n, sr):
    """Many tiny rising sine chirps (bubbles) over a faint fizz."""
    out = 0.02 * rng.normal(0, 1, n)
    for _ in range(int(rng.integers(60, 110))):
        length = int(rng.integers(sr // 80, sr // 25))
        start = int(rng.integers(0, n - length))
        tt = np.arange(length) / sr
        f0 = rng.uniform(500, 1500)
        sweep = f0 * (1 + rng.uniform(0.5, 1.5) * tt / tt[-1])
        phase = 2 * np.pi * np.cumsum(sweep) / sr
        out[start:start + length] += rng.uniform(0.2, 0.6) * np.sin(phase) * np.exp(-tt / (tt[-1] / 3))
    return out


FAMILY_SYNTHS = {"crunchy": _crunchy, "classical": _classical, "carbonated": _carbonated}


@dataclass(frozen=True)
class Clip:
    clip_id: int
    family: str
    samples: np.ndarray
    sample_rate: int = AUDIO_RATE

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate

    @property
    def duration_ms(self) -> int:
        return int(round(1000 * self.duration_s))


@dataclass(frozen=True)
class ClipLibrary:
    clips: dict[ActivityLabel, tuple[Clip, ...]]

    def __post_init__(self):
        if set(self.clips) != set(SOUNDING_ACTIVITIES):
            raise InvalidSpec("library needs clip sets for exactly crunchy, soft and beverage")
        for activity, clips in self.clips.items():
            if [c.clip_id for c in clips] != list(range(CLIPS_PER_ACTIVITY)):
                raise InvalidSpec(f"{activity}: clip ids must be 0..{CLIPS_PER_ACTIVITY - 1}")
            for c in clips:
                if not 3.5 <= c.duration_s <= 4.5:
                    raise InvalidSpec(f"{activity} clip {c.clip_id} lasts {c.duration_s:.2f} s")

    def clip(self, activity: ActivityLabel, clip_id: int) -> Clip:
        return self.clips[activity][clip_id]


def build_placeholder_library(seed: int = 0, family_map: dict[ActivityLabel, str] | None = None,
                              sample_rate: int = AUDIO_RATE) -> ClipLibrary:
    """Synthesise 3 x 10 distinguishable clips with the fade already applied."""
    family_map = dict(family_map or DEFAULT_FAMILY_MAP)
    n = int(round(CLIP_SECONDS * sample_rate))
    clips = {}
    for activity in SOUNDING_ACTIVITIES:
        family = family_map[activity]
        synth = FAMILY_SYNTHS[family]
        items = []
        for clip_id in range(CLIPS_PER_ACTIVITY):
            rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(activity.index, clip_id)))
            raw = _normalise(synth(rng, n, sample_rate))
            items.append(Clip(clip_id, family, apply_fade(raw, sample_rate, FADE_OUT_S), sample_rate))
        clips[activity] = tuple(items)
    return ClipLibrary(clips)


def write_wav(path, samples: np.ndarray, sample_rate: int = AUDIO_RATE) -> None:
    """16-bit mono PCM WAV."""
    pcm = np.round(np.clip(samples, -1.0, 1.0) * 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(sample_rate)
        w.writeframes(pcm.tobytes())


def write_library(library: ClipLibrary, directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for activity, clips in library.clips.items():
        for c in clips:
            p = directory / f"{activity.value}_{c.family}_{c.clip_id}.wav"
            write_wav(p, c.samples, c.sample_rate)
            paths.append(p)
    return paths


@dataclass(frozen=True)
class Silence:
    pass


@dataclass(frozen=True)
class Play:
    activity: ActivityLabel
    clip_id: int
    fade_out_s: float = FADE_OUT_S
    start_ms: int = 0
    """When the clip actually starts; later than the prediction if the
    previous clip was still playing."""

    def __post_init__(self):
        if self.activity not in SOUNDING_ACTIVITIES:
            raise InvalidSpec(f"{self.activity} has no sounds")


PlaybackAction = Union[Silence, Play]


@dataclass(frozen=True)
class SchedulerEvent:
    t_ms: int
    predicted: ActivityLabel
    action: PlaybackAction

    def csv_row(self) -> str:
        if isinstance(self.action, Play):
            return f"{self.t_ms},{self.predicted.value},play,{self.action.clip_id}"
        return f"{self.t_ms},{self.predicted.value},silence,"


@dataclass
class SchedulerState:
    seed: int = 0
    last_clip: dict[ActivityLabel, int] = field(default_factory=dict)
    history: list[SchedulerEvent] = field(default_factory=list)
    busy_until_ms: int = 0
    rng: np.random.Generator = field(init=False)

    def __post_init__(self):
        self.rng = np.random.default_rng(self.seed)


class SoundScheduler:
    """Per-session scheduler. Not thread-safe: one instance per session,
    driven sequentially."""

    def __init__(self, library: ClipLibrary, seed: int = 0):
        self.library = library
        self.state = SchedulerState(seed)

    @property
    def history(self) -> list[SchedulerEvent]:
        return list(self.state.history)

    def _draw(self, activity: ActivityLabel) -> int:
        last = self.state.last_clip.get(activity)
        if last is None:
            return int(self.state.rng.integers(CLIPS_PER_ACTIVITY))
        # uniform over the other nine clips
        r = int(self.state.rng.integers(CLIPS_PER_ACTIVITY - 1))
        return r if r < last else r + 1

    def next_action(self, predicted: ActivityLabel, t_ms: int | None = None) -> PlaybackAction:
        st = self.state
        if t_ms is None:
            t_ms = st.history[-1].t_ms + int(CLIP_SECONDS * 1000) if st.history else 0
        if predicted in SILENT_ACTIVITIES:
            action: PlaybackAction = Silence()
        else:
            clip_id = self._draw(predicted)
            st.last_clip[predicted] = clip_id
            start = max(t_ms, st.busy_until_ms)
            st.busy_until_ms = start + self.library.clip(predicted, clip_id).duration_ms
            action = Play(predicted, clip_id, FADE_OUT_S, start)
        st.history.append(SchedulerEvent(t_ms, predicted, action))
        return action

    def events_csv(self) -> str:
        return "t_ms,predicted,action,clip_id\n" + "".join(e.csv_row() + "\n" for e in self.state.history)
