import json
import threading
import urllib.request

import numpy as np
import pytest

from gustosonic.errors import BadRequest, ConnectionFailed, ModelUnavailable
from gustosonic.featurize import WindowSpec, feature_matrix, segment
from gustosonic.learn import compute_metrics
from gustosonic.sensor_data import ActivityLabel, LabeledDataset
from gustosonic.service import (
    BackgroundServer,
    HttpPredictClient,
    LocalClient,
    PredictionService,
    PredictRequest,
    RequestLog,
    ServerError,
    replay,
)
from gustosonic.synthgen import GeneratorSpec, generate_activity, generate_dataset

IDLE_WINDOW = np.tile([0.0, -1.0, 0.0, 0.0, 0.0, 0.0], (200, 1))


def _dead_endpoint():
    import socket
    s = socket.socket()
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    return f"http://127.0.0.1:{port}"


@pytest.fixture(scope="module")
def service(five_class_model):
    return PredictionService(five_class_model)


@pytest.fixture(scope="module")
def server(service):
    with BackgroundServer(service) as srv:
        yield srv


@pytest.fixture(scope="module")
def held_out():
    return generate_dataset(GeneratorSpec(participants=1, minutes_per_activity=1.0, seed=99,
                                          activities=tuple(ActivityLabel)))


def _post(endpoint, body: bytes):
    req = urllib.request.Request(endpoint + "/predict", data=body, headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=5) as r:
            return r.status, json.loads(r.read())
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read())


def test_idle_window_predicts_idle(service):
    resp = service.handle_predict(PredictRequest("s", 0, IDLE_WINDOW))
    assert resp.activity is ActivityLabel.IDLE
    assert 0.0 < resp.confidence <= 1.0
    assert resp.model_version.startswith("rf-")


def test_short_window_is_rejected_with_dimension():
    doc = {"session_id": "s", "timestamp_ms": 0, "window": IDLE_WINDOW[:199].tolist()}
    with pytest.raises(BadRequest, match="200 rows, got 199"):
        PredictRequest.from_json(doc)


@pytest.mark.parametrize("doc", [
    [],
    {"session_id": "s", "timestamp_ms": 0},
    {"session_id": 1, "timestamp_ms": 0, "window": IDLE_WINDOW.tolist()},
    {"session_id": "s", "timestamp_ms": "0", "window": IDLE_WINDOW.tolist()},
    {"session_id": "s", "timestamp_ms": 0, "window": IDLE_WINDOW[:, :5].tolist()},
    {"session_id": "s", "timestamp_ms": 0, "window": [[float("nan")] * 6] * 200},
])
def test_malformed_requests(doc):
    with pytest.raises(BadRequest):
        PredictRequest.from_json(doc)


def test_identical_requests_identical_responses(service):
    body = json.dumps(PredictRequest("s", 0, IDLE_WINDOW).to_json()).encode()
    assert service.handle_json(body) == service.handle_json(body)


def test_http_status_codes(server):
    ok = json.dumps(PredictRequest("s", 0, IDLE_WINDOW).to_json()).encode()
    status, doc = _post(server.endpoint, ok)
    assert status == 200 and doc["activity"] == "idle"
    status, doc = _post(server.endpoint, b"{not json")
    assert status == 400 and doc["error"] == "bad_request"
    short = json.dumps({"session_id": "s", "timestamp_ms": 0, "window": IDLE_WINDOW[:199].tolist()}).encode()
    status, doc = _post(server.endpoint, short)
    assert status == 400 and "199" in doc["reason"]
    with urllib.request.urlopen(server.endpoint + "/health", timeout=5) as r:
        assert json.loads(r.read())["status"] == "ok"


def test_no_model_is_503():
    svc = PredictionService(None)
    with pytest.raises(ModelUnavailable):
        svc.handle_predict(PredictRequest("s", 0, IDLE_WINDOW))
    with BackgroundServer(svc) as srv:
        status, doc = _post(srv.endpoint, json.dumps(PredictRequest("s", 0, IDLE_WINDOW).to_json()).encode())
    assert status == 503 and doc["error"] == "model_unavailable"
    with BackgroundServer(svc) as srv:
        with pytest.raises(ServerError) as info:
            HttpPredictClient(srv.endpoint).predict(PredictRequest("s", 0, IDLE_WINDOW))
    assert info.value.status == 503


def test_replay_sends_one_request_per_window(server):
    data = generate_activity(ActivityLabel.IDLE, 60, 50, rng=0)
    report = replay(data, HttpPredictClient(server.endpoint))
    assert report.requests_sent == 15
    assert [r.window_start_ms for r in report.rows] == [4000 * k for k in range(15)]
    assert report.complete


def test_unreachable_endpoint():
    sleeps = []
    client = HttpPredictClient(_dead_endpoint(), sleep=sleeps.append)
    data = generate_activity(ActivityLabel.IDLE, 60, 50, rng=0)
    with pytest.raises(ConnectionFailed) as info:
        replay(data, client)
    assert sleeps == [0.25, 0.25]
    assert info.value.report.rows == []
    assert not info.value.report.complete


def test_online_matches_offline(service, server, five_class_model, held_out):
    windows = segment(held_out, WindowSpec())
    off_lab, off_conf = five_class_model.predict_indices(feature_matrix(windows))
    report = replay(held_out, HttpPredictClient(server.endpoint))
    assert len(report.rows) == len(windows)
    for row, lab, conf in zip(report.rows, off_lab, off_conf):
        assert row.predicted.index == lab
        assert abs(row.confidence - conf) <= 1e-9
    offline_f1 = compute_metrics([w.label for w in windows], off_lab.tolist()).macro_f1
    assert abs(report.metrics.macro_f1 - offline_f1) <= 0.02


def test_realtime_pacing_preserves_order(service, held_out):
    now = [0.0]
    waits = []

    def sleep(s):
        waits.append(s)
        now[0] += s

    fast = replay(held_out, LocalClient(service))
    slow = replay(held_out, LocalClient(service), pace="realtime", sleep=sleep, clock=lambda: now[0])
    assert fast.to_csv() == slow.to_csv()
    assert waits and all(w == pytest.approx(4.0) for w in waits)


def test_replay_report_csv(service):
    data = generate_activity(ActivityLabel.SPEAKING, 8, 50, rng=0)
    lines = replay(data, LocalClient(service)).to_csv().splitlines()
    assert lines[0] == "window_start_ms,true,predicted,confidence"
    assert len(lines) == 3
    assert lines[1].startswith("0,speaking,")


def test_request_log_under_concurrency(service):
    svc = PredictionService(service.model)
    body = json.dumps(PredictRequest("s", 0, IDLE_WINDOW).to_json()).encode()

    def worker():
        for _ in range(10):
            svc.handle_json(body)

    threads = [threading.Thread(target=worker) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(svc.log) == 80


def test_request_log_append_only():
    log = RequestLog()
    assert log.entries() == []
    snapshot = log.entries()
    snapshot.append(object())
    assert len(log) == 0


def test_empty_dataset_replays_nothing(service):
    empty = LabeledDataset.from_samples([])
    assert replay(empty, LocalClient(service)).requests_sent == 0
