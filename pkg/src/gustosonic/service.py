"""Prediction backend and replay client.

Wire protocol (one window per call)::

    POST /predict
    {"session_id": "s1", "timestamp_ms": 4000, "window": [[ax, ay, az, gx, gy, gz], ...]}   # 200 rows

    200 {"activity": "crunchy", "confidence": 0.87, "model_version": "rf-3f2a..."}
    400 {"error": "bad_request", "reason": "..."}
    503 {"error": "model_unavailable", "reason": "..."}

``GET /health`` returns ``{"status": "ok", "model_version": ...}``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable

import numpy as np

from .errors import BadRequest, ConnectionFailed, ModelUnavailable, PipelineRuntimeError
from .featurize import FEATURE_NAMES, WindowSpec, extract_features, segment
from .learn.forest import RandomForestModel
from .learn.metrics import MetricsReport, compute_metrics
from .learn.serialization import dumps
from .sensor_data import ActivityLabel, LabeledDataset

log = logging.getLogger(__name__)

DEFAULT_WINDOW_LEN = 200
RETRY_ATTEMPTS = 3
RETRY_BACKOFF_S = 0.25


@dataclass(frozen=True)
class PredictRequest:
    session_id: str
    timestamp_ms: int
    window: np.ndarray

    @classmethod
    def from_json(cls, doc, window_len: int = DEFAULT_WINDOW_LEN) -> "PredictRequest":
        if not isinstance(doc, dict):
            raise BadRequest("request body must be a JSON object")
        missing = {"session_id", "timestamp_ms", "window"} - doc.keys()
        if missing:
            raise BadRequest(f"missing field(s): {', '.join(sorted(missing))}")
        session_id, ts, window = doc["session_id"], doc["timestamp_ms"], doc["window"]
        if not isinstance(session_id, str):
            raise BadRequest("session_id must be a string")
        if isinstance(ts, bool) or not isinstance(ts, int):
            raise BadRequest("timestamp_ms must be an integer")
        if not isinstance(window, list):
            raise BadRequest("window must be an array of rows")
        if len(window) != window_len:
            raise BadRequest(f"window must have {window_len} rows, got {len(window)}")
        for i, row in enumerate(window):
            if not isinstance(row, list) or len(row) != 6:
                width = len(row) if isinstance(row, list) else "non-array"
                raise BadRequest(f"window row {i} must have 6 columns, got {width}")
            for v in row:
                if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                    raise BadRequest(f"window row {i} holds a non-finite or non-numeric value")
        return cls(session_id, ts, np.array(window, dtype=np.float64))

    def to_json(self) -> dict:
        return {"session_id": self.session_id, "timestamp_ms": int(self.timestamp_ms),
                "window": np.asarray(self.window, dtype=np.float64).tolist()}


@dataclass(frozen=True)
class PredictResponse:
    activity: ActivityLabel
    confidence: float
    model_version: str

    def to_json(self) -> dict:
        return {"activity": self.activity.value, "confidence": self.confidence,
                "model_version": self.model_version}

    @classmethod
    def from_json(cls, doc) -> "PredictResponse":
        return cls(ActivityLabel.parse(doc["activity"]), float(doc["confidence"]), str(doc["model_version"]))


@dataclass(frozen=True)
class LogEntry:
    received_at: float
    session_id: str
    timestamp_ms: int
    activity: ActivityLabel
    confidence: float
    latency_s: float


class RequestLog:
    """Append-only, thread-safe record of handled requests."""

    def __init__(self):
        self._entries: list[LogEntry] = []
        self._lock = threading.Lock()

    def append(self, entry: LogEntry) -> None:
        with self._lock:
            self._entries.append(entry)

    def entries(self) -> list[LogEntry]:
        with self._lock:
            return list(self._entries)

    def __len__(self):
        with self._lock:
            return len(self._entries)


def model_version(model: RandomForestModel) -> str:
    return "rf-" + hashlib.sha256(dumps(model).encode()).hexdigest()[:12]


class PredictionService:
    """Transport-independent request handling. The model is shared
    read-only; only the log is mutated."""

    def __init__(self, model: RandomForestModel | None, window_len: int | None = None):
        self.model = model
        if model is not None and tuple(model.feature_schema) != FEATURE_NAMES:
            raise ModelUnavailable("model feature schema does not match this build's featurizer")
        self.window_len = window_len or (
            int(model.train_meta.get("window_len_samples", DEFAULT_WINDOW_LEN)) if model else DEFAULT_WINDOW_LEN)
        self.version = model_version(model) if model is not None else ""
        self.log = RequestLog()

    def handle_predict(self, req: PredictRequest) -> PredictResponse:
        if self.model is None:
            raise ModelUnavailable("no model loaded")
        start = time.perf_counter()
        if req.window.shape != (self.window_len, 6):
            raise BadRequest(f"window must be {self.window_len}x6, got {req.window.shape}")
        label, conf = self.model.predict(extract_features(req.window))
        resp = PredictResponse(label, conf, self.version)
        self.log.append(LogEntry(time.time(), req.session_id, req.timestamp_ms, label, conf,
                                 time.perf_counter() - start))
        return resp

    def handle_json(self, body: bytes) -> tuple[int, dict]:
        """Status code and JSON body for a raw request payload."""
        try:
            if self.model is None:
                raise ModelUnavailable("no model loaded")
            try:
                doc = json.loads(body)
            except (json.JSONDecodeError, UnicodeDecodeError):
                raise BadRequest("body is not valid JSON") from None
            req = PredictRequest.from_json(doc, self.window_len)
            return 200, self.handle_predict(req).to_json()
        except BadRequest as exc:
            return 400, {"error": "bad_request", "reason": str(exc)}
        except ModelUnavailable as exc:
            return 503, {"error": "model_unavailable", "reason": str(exc)}


def _make_handler(service: PredictionService):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def _send(self, status: int, doc: dict):
            payload = json.dumps(doc).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def do_POST(self):
            if self.path != "/predict":
                self._send(404, {"error": "not_found", "reason": self.path})
                return
            length = int(self.headers.get("Content-Length") or 0)
            status, doc = service.handle_json(self.rfile.read(length))
            self._send(status, doc)

        def do_GET(self):
            if self.path == "/health":
                self._send(200, {"status": "ok" if service.model else "no_model", "model_version": service.version})
            else:
                self._send(404, {"error": "not_found", "reason": self.path})

        def log_message(self, fmt, *args):
            log.debug("%s - %s", self.address_string(), fmt % args)

    return Handler


def make_server(service: PredictionService, host: str = "127.0.0.1", port: int = 8000) -> ThreadingHTTPServer:
    server = ThreadingHTTPServer((host, port), _make_handler(service))
    server.daemon_threads = True
    return server


class BackgroundServer:
    """Context manager running a server on a daemon thread (port 0 picks a
    free port)."""

    def __init__(self, service: PredictionService, host: str = "127.0.0.1", port: int = 0):
        self.service = service
        self.server = make_server(service, host, port)
        self._thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    @property
    def endpoint(self) -> str:
        host, port = self.server.server_address[:2]
        return f"http://{host}:{port}"

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()
        self._thread.join()


class ServerError(PipelineRuntimeError):
    def __init__(self, status: int, body: dict):
        super().__init__(f"server answered {status}: {body.get('reason', body)}")
        self.status = status
        self.body = body


class HttpPredictClient:
    """Posts windows to ``<endpoint>/predict``.

    Connection failures are retried ``attempts`` times with ``backoff_s``
    between tries, then raise :class:`ConnectionFailed`. HTTP error answers
    are not retried and raise :class:`ServerError`.
    """

    def __init__(self, endpoint: str, attempts: int = RETRY_ATTEMPTS, backoff_s: float = RETRY_BACKOFF_S,
                 timeout_s: float = 10.0, sleep: Callable[[float], None] = time.sleep):
        self.url = endpoint.rstrip("/") + "/predict"
        self.attempts = attempts
        self.backoff_s = backoff_s
        self.timeout_s = timeout_s
        self._sleep = sleep

    def predict(self, req: PredictRequest) -> PredictResponse:
        data = json.dumps(req.to_json()).encode()
        last_error = None
        for attempt in range(self.attempts):
            if attempt:
                self._sleep(self.backoff_s)
            request = urllib.request.Request(self.url, data=data, headers={"Content-Type": "application/json"})
            try:
                with urllib.request.urlopen(request, timeout=self.timeout_s) as resp:
                    return PredictResponse.from_json(json.loads(resp.read()))
            except urllib.error.HTTPError as exc:
                try:
                    body = json.loads(exc.read())
                except ValueError:
                    body = {"reason": exc.reason}
                raise ServerError(exc.code, body) from None
            except (urllib.error.URLError, ConnectionError, TimeoutError, OSError) as exc:
                last_error = exc
                log.debug("attempt %d to %s failed: %s", attempt + 1, self.url, exc)
        raise ConnectionFailed(f"{self.url} unreachable after {self.attempts} attempts: {last_error}")


class LocalClient:
    """In-process stand-in for :class:`HttpPredictClient` (no transport)."""

    def __init__(self, service: PredictionService):
        self.service = service

    def predict(self, req: PredictRequest) -> PredictResponse:
        return PredictResponse.from_json(self.service.handle_json(json.dumps(req.to_json()).encode())[1])


@dataclass
class ReplayRow:
    window_start_ms: int
    true: ActivityLabel | None
    predicted: ActivityLabel | None
    confidence: float | None
    error: str = ""


@dataclass
class ReplayReport:
    rows: list[ReplayRow] = field(default_factory=list)
    complete: bool = True
    requests_sent: int = 0

    @property
    def metrics(self) -> MetricsReport | None:
        scored = [r for r in self.rows if r.predicted is not None and r.true is not None]
        if not scored:
            return None
        return compute_metrics([r.true for r in scored], [r.predicted for r in scored])

    def to_csv(self) -> str:
        lines = ["window_start_ms,true,predicted,confidence"]
        for r in self.rows:
            conf = "" if r.confidence is None else repr(r.confidence)
            lines.append(f"{r.window_start_ms},{r.true or ''},{r.predicted or ''},{conf}")
        return "\n".join(lines) + "\n"


def replay(dataset: LabeledDataset, client, pace: str = "accelerated", session_id: str = "replay",
           window_len: int = DEFAULT_WINDOW_LEN,
           on_response: Callable[[ReplayRow], None] | None = None,
           sleep: Callable[[float], None] = time.sleep, clock: Callable[[], float] = time.monotonic) -> ReplayReport:
    """Stream ``dataset`` to a prediction client one non-overlapping window at a time.

    ``pace="realtime"`` spaces requests by the window duration; ``"accelerated"``
    sends them back to back. Ordering is identical in both. ``on_response``
    is called with each finished row, in order. On :class:`ConnectionFailed`
    the partial report, flagged incomplete, is attached to the exception as
    ``report``.
    """
    if pace not in ("realtime", "accelerated"):
        raise ValueError(f"pace must be 'realtime' or 'accelerated', got {pace!r}")
    windows = segment(dataset, WindowSpec(window_len, window_len))
    period = window_len / dataset.sample_rate_hz
    report = ReplayReport()
    t0 = clock()
    for k, w in enumerate(windows):
        if pace == "realtime":
            wait = t0 + k * period - clock()
            if wait > 0:
                sleep(wait)
        req = PredictRequest(session_id, w.start_ms, w.values)
        report.requests_sent += 1
        try:
            resp = client.predict(req)
            row = ReplayRow(w.start_ms, w.label, resp.activity, resp.confidence)
        except ConnectionFailed as exc:
            report.complete = False
            exc.report = report
            raise
        except ServerError as exc:
            row = ReplayRow(w.start_ms, w.label, None, None, str(exc))
        report.rows.append(row)
        if on_response is not None:
            on_response(row)
    return report
