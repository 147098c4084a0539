"""IMU data model, CSV ingestion/emission and dataset validation.

CSV layout
----------
One header line followed by one row per sample::

    timestamp_ms,ax,ay,az,gx,gy,gz,label

==============  ==========================================
Column          Meaning
==============  ==========================================
timestamp_ms    integer milliseconds since session start
ax, ay, az      acceleration (g)
gx, gy, gz      angular rate (deg/s)
label           crunchy | soft | beverage | speaking | idle
==============  ==========================================

Units are a convention only: nothing downstream depends on them as long as
training and inference data agree.

A session restarts whenever the timestamp goes backwards. Inside a session
timestamps must strictly increase; a repeated timestamp is reported by
:func:`validate` as a monotonicity violation.
"""

from __future__ import annotations

import enum
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, TextIO

import numpy as np

from .errors import BadLabel, BadNumber, HeaderMismatch, RowArity

CSV_HEADER = "timestamp_ms,ax,ay,az,gx,gy,gz,label"
CHANNELS = ("ax", "ay", "az", "gx", "gy", "gz")
DEFAULT_SAMPLE_RATE_HZ = 50.0


class ActivityLabel(enum.Enum):
    """The five mouth activities. Declaration order is the tie-break order."""

    CRUNCHY_FOOD = "crunchy"
    SOFT_FOOD = "soft"
    BEVERAGE = "beverage"
    SPEAKING = "speaking"
    IDLE = "idle"

    @property
    def index(self) -> int:
        return _LABEL_INDEX[self]

    @classmethod
    def parse(cls, text: str) -> "ActivityLabel":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise BadLabel(f"unknown activity label {text!r}") from None

    @classmethod
    def from_index(cls, i: int) -> "ActivityLabel":
        return LABELS[i]

    def __str__(self) -> str:
        return self.value


LABELS: tuple[ActivityLabel, ...] = tuple(ActivityLabel)
_LABEL_INDEX = {lab: i for i, lab in enumerate(LABELS)}
MOUTH_ACTIVITIES = (
    ActivityLabel.CRUNCHY_FOOD,
    ActivityLabel.SOFT_FOOD,
    ActivityLabel.BEVERAGE,
    ActivityLabel.SPEAKING,
)
SILENT_ACTIVITIES = frozenset({ActivityLabel.SPEAKING, ActivityLabel.IDLE})


@dataclass(frozen=True)
class ImuSample:
    timestamp_ms: int
    ax: float
    ay: float
    az: float
    gx: float
    gy: float
    gz: float

    def __post_init__(self):
        if self.timestamp_ms < 0:
            raise BadNumber(f"negative timestamp {self.timestamp_ms}")
        if not all(math.isfinite(v) for v in self.channels()):
            raise BadNumber("non-finite channel value")

    def channels(self) -> tuple[float, float, float, float, float, float]:
        return (self.ax, self.ay, self.az, self.gx, self.gy, self.gz)


class LabeledDataset:
    """An ordered, immutable sequence of labelled IMU samples.

    Stored column-wise: ``timestamps`` (int64, N), ``values`` (float64, N x 6
    in :data:`CHANNELS` order) and ``labels`` (int8 label indices, N).
    """

    __slots__ = ("timestamps", "values", "labels", "sample_rate_hz", "source")

    def __init__(self, timestamps, values, labels, sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
                 source: str = ""):
        ts = np.array(timestamps, dtype=np.int64).reshape(-1)
        vals = np.array(values, dtype=np.float64).reshape(-1, 6)
        labs = np.array(labels, dtype=np.int8).reshape(-1)
        if not (len(ts) == len(vals) == len(labs)):
            raise ValueError("timestamps, values and labels differ in length")
        if sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if len(ts) and ts.min() < 0:
            raise BadNumber("negative timestamp")
        if not np.isfinite(vals).all():
            raise BadNumber("non-finite channel value")
        if len(labs) and (labs.min() < 0 or labs.max() >= len(LABELS)):
            raise BadLabel("label index out of range")
        for arr in (ts, vals, labs):
            arr.flags.writeable = False
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "labels", labs)
        object.__setattr__(self, "sample_rate_hz", float(sample_rate_hz))
        object.__setattr__(self, "source", source)

    def __setattr__(self, name, value):
        raise AttributeError("LabeledDataset is immutable")

    @classmethod
    def from_samples(cls, pairs: Iterable[tuple[ImuSample, ActivityLabel]],
                     sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ, source: str = "") -> "LabeledDataset":
        pairs = list(pairs)
        return cls(
            [s.timestamp_ms for s, _ in pairs],
            np.array([s.channels() for s, _ in pairs], dtype=np.float64).reshape(-1, 6),
            [lab.index for _, lab in pairs],
            sample_rate_hz=sample_rate_hz,
            source=source,
        )

    @classmethod
    def concat(cls, parts: list["LabeledDataset"], source: str = "") -> "LabeledDataset":
        if not parts:
            return cls([], np.empty((0, 6)), [], source=source)
        return cls(
            np.concatenate([p.timestamps for p in parts]),
            np.concatenate([p.values for p in parts]),
            np.concatenate([p.labels for p in parts]),
            sample_rate_hz=parts[0].sample_rate_hz,
            source=source or parts[0].source,
        )

    def record_count(self) -> int:
        return len(self.timestamps)

    __len__ = record_count

    def samples(self) -> Iterator[tuple[ImuSample, ActivityLabel]]:
        for t, row, lab in zip(self.timestamps, self.values, self.labels):
            yield ImuSample(int(t), *map(float, row)), LABELS[lab]

    def label_at(self, i: int) -> ActivityLabel:
        return LABELS[self.labels[i]]

    def subset(self, start: int, stop: int) -> "LabeledDataset":
        return LabeledDataset(self.timestamps[start:stop], self.values[start:stop], self.labels[start:stop],
                              self.sample_rate_hz, self.source)

    def __eq__(self, other):
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        return (self.sample_rate_hz == other.sample_rate_hz
                and np.array_equal(self.timestamps, other.timestamps)
                and np.array_equal(self.values, other.values)
                and np.array_equal(self.labels, other.labels))

    def __repr__(self):
        return f"LabeledDataset(records={len(self)}, sample_rate_hz={self.sample_rate_hz}, source={self.source!r})"


def _parse_float(text: str, line_no: int, column: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise BadNumber(f"line {line_no}: {column}={text!r} is not a number") from None
    if not math.isfinite(v):
        raise BadNumber(f"line {line_no}: {column}={text!r} is not finite")
    return v


def parse_csv(text: str | TextIO, sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
              source: str = "") -> LabeledDataset:
    """Parse the sample CSV format into a :class:`LabeledDataset`.

    ``text`` may be a string or any text stream. Errors carry the 1-based
    line number of the offending row (the header is line 1).
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    header = stream.readline()
    if header.rstrip("\r\n") != CSV_HEADER:
        raise HeaderMismatch(f"expected header {CSV_HEADER!r}, got {header.rstrip()!r}")

    ts: list[int] = []
    vals: list[tuple[float, ...]] = []
    labs: list[int] = []
    for line_no, line in enumerate(stream, start=2):
        line = line.rstrip("\r\n")
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != 8:
            raise RowArity(f"line {line_no}: expected 8 fields, got {len(fields)}")
        try:
            t = int(fields[0])
        except ValueError:
            raise BadNumber(f"line {line_no}: timestamp_ms={fields[0]!r} is not an integer") from None
        if t < 0:
            raise BadNumber(f"line {line_no}: negative timestamp {t}")
        vals.append(tuple(_parse_float(f, line_no, c) for f, c in zip(fields[1:7], CHANNELS)))
        try:
            labs.append(ActivityLabel.parse(fields[7]).index)
        except BadLabel:
            raise BadLabel(f"line {line_no}: unknown activity label {fields[7]!r}") from None
        ts.append(t)

    return LabeledDataset(ts, np.array(vals, dtype=np.float64).reshape(-1, 6), labs,
                          sample_rate_hz=sample_rate_hz, source=source)


def write_csv(dataset: LabeledDataset, out: TextIO | None = None) -> str | None:
    """Format ``dataset`` as CSV (6 decimal places per channel).

    Returns the text when ``out`` is None, otherwise writes to ``out``.
    """
    buf = io.StringIO() if out is None else out
    buf.write(CSV_HEADER + "\n")
    names = [lab.value for lab in LABELS]
    for t, row, lab in zip(dataset.timestamps.tolist(), dataset.values.tolist(), dataset.labels.tolist()):
        buf.write(f"{t},{row[0]:.6f},{row[1]:.6f},{row[2]:.6f},{row[3]:.6f},{row[4]:.6f},{row[5]:.6f},"
                  f"{names[lab]}\n")
    return buf.getvalue() if out is None else None


def read_csv_file(path, **kwargs) -> LabeledDataset:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_csv(fh, source=kwargs.pop("source", str(path)), **kwargs)


def write_csv_file(dataset: LabeledDataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        write_csv(dataset, fh)


@dataclass
class ValidationReport:
    class_counts: dict[ActivityLabel, int]
    monotonicity_violations: list[tuple[int, int, int]] = field(default_factory=list)
    """(row index, previous timestamp, timestamp) for each non-increasing step."""
    segments: int = 0
    median_gap_ms: float | None = None
    expected_gap_ms: float = 0.0
    rate_consistent: bool = True
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.monotonicity_violations and self.rate_consistent


def segment_starts(timestamps: np.ndarray) -> np.ndarray:
    """Row indices where a new session begins (row 0 and every timestamp reset)."""
    if len(timestamps) == 0:
        return np.empty(0, dtype=np.int64)
    resets = np.flatnonzero(np.diff(timestamps) < 0) + 1
    return np.concatenate([[0], resets])


def validate(dataset: LabeledDataset, rate_tolerance: float = 0.2) -> ValidationReport:
    counts = Counter(dataset.labels.tolist())
    report = ValidationReport(
        class_counts={lab: counts.get(lab.index, 0) for lab in LABELS},
        expected_gap_ms=1000.0 / dataset.sample_rate_hz,
    )
    ts = dataset.timestamps
    if len(ts) == 0:
        report.warnings.append("dataset is empty")
        return report

    report.segments = len(segment_starts(ts))
    gaps = np.diff(ts)
    for i in np.flatnonzero(gaps == 0):
        report.monotonicity_violations.append((int(i + 1), int(ts[i]), int(ts[i + 1])))
    if report.monotonicity_violations:
        report.warnings.append(f"{len(report.monotonicity_violations)} repeated timestamps")

    positive = gaps[gaps > 0]
    if len(positive):
        report.median_gap_ms = float(np.median(positive))
        deviation = abs(report.median_gap_ms - report.expected_gap_ms) / report.expected_gap_ms
        if deviation > rate_tolerance:
            report.rate_consistent = False
            report.warnings.append(
                f"median gap {report.median_gap_ms:g} ms deviates from expected "
                f"{report.expected_gap_ms:g} ms by {deviation:.0%}")
    return report
