import json
import socket

import pytest

import gustosonic.service as service_mod
from gustosonic.cli import COMMANDS, EXIT_DATA, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, build_parser, main, resolve, run_replay
from gustosonic.learn import load_model
from gustosonic.sensor_data import read_csv_file
from gustosonic.service import BackgroundServer, HttpPredictClient, PredictionService


def _run(*argv, env=None):
    return main([str(a) for a in argv], env={} if env is None else env)


@pytest.fixture(scope="module")
def small_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "small.csv"
    assert _run("gen", "--out", path, "--participants", 2, "--minutes", 1, "--activities", "all", "--seed", 3) == 0
    return path


@pytest.fixture(scope="module")
def model_path(small_csv, tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "rf.json"
    assert _run("train", "--data", small_csv, "--model", path, "--n-trees", 20) == 0
    return path


@pytest.fixture(scope="module")
def idle_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("idle") / "idle.csv"
    assert _run("gen", "--out", path, "--participants", 1, "--minutes", 1, "--activities", "idle") == 0
    return path


def test_gen_is_byte_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert _run("gen", "--seed", 7, "--out", p, "--minutes", 0.5) == 0
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.csv"
    _run("gen", "--seed", 8, "--out", c, "--minutes", 0.5)
    assert a.read_bytes() != c.read_bytes()


def test_gen_defaults_record_count(tmp_path):
    out = tmp_path / "d.csv"
    assert _run("gen", "--out", out) == 0
    assert len(read_csv_file(out)) == 216_000
    cfg = json.loads((tmp_path / "d.csv.config.json").read_text())
    assert cfg["participants"] == 6 and cfg["minutes"] == 3.0 and cfg["seed"] == 0


def test_gen_zero_minutes_fails(tmp_path):
    assert _run("gen", "--out", tmp_path / "x.csv", "--minutes", 0) == EXIT_DATA


def test_usage_errors(tmp_path):
    assert _run() == EXIT_USAGE
    assert _run("gen") == EXIT_USAGE
    assert _run("gen", "--out", tmp_path / "x.csv", "--seed", "abc") == EXIT_USAGE
    assert _run("cv", "--data", tmp_path / "missing.csv", "--out", tmp_path) == EXIT_DATA


def test_precedence_flag_env_config(tmp_path):
    conf = tmp_path / "conf.json"
    conf.write_text(json.dumps({"seed": 1, "participants": 1, "minutes": 0.2}))
    out = tmp_path / "p.csv"
    env = {"GUSTO_SEED": "2"}
    assert _run("gen", "--config", conf, "--out", out, env=env) == 0
    assert json.loads((tmp_path / "p.csv.config.json").read_text())["seed"] == 2
    assert _run("gen", "--config", conf, "--out", out, "--seed", 3, env=env) == 0
    recorded = json.loads((tmp_path / "p.csv.config.json").read_text())
    assert recorded["seed"] == 3 and recorded["participants"] == 1
    assert _run("gen", "--config", conf, "--out", out) == 0
    assert json.loads((tmp_path / "p.csv.config.json").read_text())["seed"] == 1


def test_train_is_deterministic(small_csv, model_path, tmp_path):
    again = tmp_path / "rf.json"
    assert _run("train", "--data", small_csv, "--model", again, "--n-trees", 20) == 0
    assert again.read_bytes() == model_path.read_bytes()
    assert len(load_model(again).trees) == 20


def test_cv_summary_table(small_csv, tmp_path):
    for name in ("a", "b"):
        assert _run("cv", "--data", small_csv, "--out", tmp_path / name, "--k", 3, "--n-trees", 10) == 0
    rows = (tmp_path / "a" / "metrics.csv").read_text().splitlines()
    assert rows[0] == "class,precision,recall,f1,support"
    assert [r.split(",")[0] for r in rows[1:]] == ["crunchy", "soft", "beverage", "speaking", "idle",
                                                   "macro avg", "weighted avg"]
    for f in ("summary.txt", "metrics.csv", "folds.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    assert (tmp_path / "a" / "config.json").exists()


def test_tune_writes_log_and_argmax(small_csv, tmp_path):
    assert _run("tune", "--data", small_csv, "--out", tmp_path, "--k", 3, "--iters", 3, "--n-trees", 10) == 0
    lines = (tmp_path / "trials.csv").read_text().splitlines()
    assert len(lines) == 1 + 4
    header = lines[0].split(",")
    col = header.index("mean_f1")
    best = json.loads((tmp_path / "best_params.json").read_text())
    assert best["mean_f1"] == max(float(line.split(",")[col]) for line in lines[1:])


def test_compare(small_csv, tmp_path):
    assert _run("compare", "--data", small_csv, "--out", tmp_path, "--k", 3) == 0
    lines = (tmp_path / "comparison.csv").read_text().splitlines()
    assert lines[0] == "model,mean_f1" and len(lines) == 5


def test_replay_idle_is_silent(model_path, idle_csv, tmp_path):
    with BackgroundServer(PredictionService(load_model(model_path))) as srv:
        assert _run("replay", "--data", idle_csv, "--endpoint", srv.endpoint, "--out", tmp_path) == 0
    events = (tmp_path / "events.csv").read_text().splitlines()
    assert len(events) == 1 + 15
    assert all(line.split(",")[2] == "silence" for line in events[1:])
    assert len((tmp_path / "replay_report.csv").read_text().splitlines()) == 16
    assert json.loads((tmp_path / "config.json").read_text())["pace"] == "accelerated"


def test_replay_pace_does_not_change_events(model_path, small_csv):
    now = [0.0]

    def fake_sleep(s):
        now[0] += s

    events = {}
    with BackgroundServer(PredictionService(load_model(model_path))) as srv:
        for pace in ("accelerated", "realtime"):
            cfg = resolve(build_parser().parse_args(["replay", "--data", str(small_csv), "--endpoint", srv.endpoint,
                                                     "--pace", pace]), COMMANDS["replay"][1], env={})
            report, scheduler = run_replay(cfg, HttpPredictClient(srv.endpoint), sleep=fake_sleep,
                                           clock=lambda: now[0])
            events[pace] = scheduler.events_csv()
    assert events["accelerated"] == events["realtime"]
    assert now[0] == pytest.approx(4.0 * (report.requests_sent - 1))


def test_replay_dead_endpoint(idle_csv, tmp_path, monkeypatch):

    monkeypatch.setattr(service_mod.time, "sleep", lambda s: None)
    s = socket.socket()
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    code = _run("replay", "--data", idle_csv, "--endpoint", f"http://127.0.0.1:{port}", "--out", tmp_path)
    assert code == EXIT_RUNTIME
    assert (tmp_path / "replay_report.csv").read_text().splitlines() == ["window_start_ms,true,predicted,confidence"]


def test_replay_bad_pace(idle_csv, tmp_path):
    assert _run("replay", "--data", idle_csv, "--out", tmp_path, "--pace", "warp") == EXIT_USAGE


def test_clips(tmp_path):
    assert _run("clips", "--out", tmp_path) == EXIT_OK
    assert len(list(tmp_path.rglob("*.wav"))) == 30
