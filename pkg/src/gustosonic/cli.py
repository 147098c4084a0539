"""Command-line entry point.

Option values resolve as: command-line flag > environment variable >
``--config`` JSON file > built-in default. Every command writes the
resolved values next to its output (``<file>.config.json`` or
``<dir>/config.json``) so a run can be repeated exactly.

Exit codes: 0 success, 2 usage error, 3 data error, 4 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .errors import DataError, PipelineRuntimeError
from .featurize import WindowSpec
from .learn.baselines import ForestSpec
from .learn.forest import ForestParams
from .learn.serialization import load_model, save_model
from .learn.tree import TreeParams
from .learn.validation import SearchSpace, comparison_csv, cross_validate, randomized_search, train_baselines
from .pipeline import dataset_xy, train_model
from .scheduler import SoundScheduler, build_placeholder_library, write_library
from .sensor_data import read_csv_file, write_csv_file
from .service import HttpPredictClient, PredictionService, make_server, replay
from .synthgen import GeneratorSpec, generate_dataset, parse_activities

log = logging.getLogger("gustosonic")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 2, 3, 4

# name -> (env var, type, default)
OPTIONS = {
    "seed": ("GUSTO_SEED", int, 0),
    "out": ("GUSTO_OUT", str, None),
    "data": ("GUSTO_DATA", str, None),
    "model": ("GUSTO_MODEL", str, None),
    "k": ("GUSTO_K", int, 10),
    "iters": ("GUSTO_ITERS", int, 10),
    "listen": ("GUSTO_LISTEN", str, "127.0.0.1:8000"),
    "endpoint": ("GUSTO_ENDPOINT", str, "http://127.0.0.1:8000"),
    "pace": ("GUSTO_PACE", str, "accelerated"),
    "clip_seed": ("GUSTO_CLIP_SEED", int, 0),
    "participants": ("GUSTO_PARTICIPANTS", int, 6),
    "minutes": ("GUSTO_MINUTES", float, 3.0),
    "rate": ("GUSTO_RATE", float, 50.0),
    "activities": ("GUSTO_ACTIVITIES", str, "crunchy,soft,beverage,speaking"),
    "noise_scale": ("GUSTO_NOISE_SCALE", float, 1.0),
    "n_trees": ("GUSTO_N_TREES", int, 100),
    "max_depth": ("GUSTO_MAX_DEPTH", int, None),
    "min_samples_split": ("GUSTO_MIN_SAMPLES_SPLIT", int, 2),
    "max_features": ("GUSTO_MAX_FEATURES", int, None),
    "window": ("GUSTO_WINDOW", int, 200),
    "session": ("GUSTO_SESSION", str, "replay"),
}


def _add(p: argparse.ArgumentParser, *names: str) -> None:
    helps = {
        "seed": "global random seed", "out": "output file or directory", "data": "input CSV dataset",
        "model": "model document path", "k": "number of CV folds", "iters": "randomized search iterations",
        "listen": "host:port to bind", "endpoint": "prediction service base URL",
        "pace": "realtime or accelerated", "clip_seed": "placeholder clip library seed",
        "participants": "simulated participants", "minutes": "minutes per activity",
        "rate": "sample rate in Hz", "activities": "comma-separated labels or 'all'",
        "noise_scale": "sensor noise multiplier", "n_trees": "trees in the forest",
        "max_depth": "maximum tree depth (unlimited if unset)", "min_samples_split": "minimum rows to split",
        "max_features": "features tried per split (ceil(sqrt(n)) if unset)", "window": "window length in samples",
        "session": "session id sent with each request",
    }
    for name in names:
        flag = "--" + name.replace("_", "-")
        p.add_argument(flag, dest=name, default=None, type=OPTIONS[name][1], help=helps[name])


def resolve(args: argparse.Namespace, names: list[str], env=os.environ) -> dict:
    file_cfg = {}
    if getattr(args, "config", None):
        file_cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    cfg = {}
    for name in names:
        env_var, typ, default = OPTIONS[name]
        flag = getattr(args, name, None)
        if flag is not None:
            cfg[name] = flag
        elif env.get(env_var) not in (None, ""):
            cfg[name] = typ(env[env_var])
        elif name in file_cfg:
            cfg[name] = None if file_cfg[name] is None else typ(file_cfg[name])
        else:
            cfg[name] = default
    return cfg


def record_config(cfg: dict, command: str, out: Path, is_dir: bool) -> Path:
    target = out / "config.json" if is_dir else out.with_name(out.name + ".config.json")
    target.write_text(json.dumps({"command": command, "version": __version__, **cfg},
                                 indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return target


def _require(cfg: dict, *names: str) -> None:
    missing = [n for n in names if not cfg.get(n)]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


class UsageError(Exception):
    pass


def _forest_params(cfg: dict) -> ForestParams:
    return ForestParams(
        n_trees=cfg["n_trees"],
        tree=TreeParams(max_depth=cfg["max_depth"], min_samples_split=cfg["min_samples_split"],
                        max_features=cfg["max_features"]),
        seed=cfg["seed"],
    )


def _outdir(cfg: dict, default: str) -> Path:
    out = Path(cfg["out"] or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


GEN_OPTS = ["seed", "out", "participants", "minutes", "rate", "activities", "noise_scale"]
FOREST_OPTS = ["seed", "n_trees", "max_depth", "min_samples_split", "max_features", "window"]


def cmd_gen(cfg: dict) -> int:
    _require(cfg, "out")
    spec = GeneratorSpec(participants=cfg["participants"], minutes_per_activity=cfg["minutes"],
                         sample_rate_hz=cfg["rate"], activities=parse_activities(cfg["activities"]),
                         seed=cfg["seed"], noise_scale=cfg["noise_scale"])
    dataset = generate_dataset(spec)
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv_file(dataset, out)
    record_config(cfg, "gen", out, is_dir=False)
    print(f"wrote {len(dataset)} records to {out}")
    return EXIT_OK


def _load(cfg: dict):
    _require(cfg, "data")
    return read_csv_file(cfg["data"])


def cmd_train(cfg: dict) -> int:
    _require(cfg, "model")
    dataset = _load(cfg)
    spec = WindowSpec(cfg["window"], cfg["window"])
    model = train_model(dataset, _forest_params(cfg), spec)
    out = Path(cfg["model"])
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    record_config(cfg, "train", out, is_dir=False)
    print(f"trained {len(model.trees)} trees on {model.train_meta['n_train']} windows -> {out}")
    return EXIT_OK


def cmd_cv(cfg: dict) -> int:
    X, y = dataset_xy(_load(cfg), WindowSpec(cfg["window"], cfg["window"]))
    report = cross_validate(X, y, ForestSpec(_forest_params(cfg)), k=cfg["k"], seed=cfg["seed"])
    out = _outdir(cfg, "cv_out")
    summary = (f"random forest, {report.k}-fold cross-validation over {len(y)} windows\n\n"
               f"{report.pooled.format_table()}\n\nmean F1 across folds: {report.mean_f1:.4f}\n")
    (out / "summary.txt").write_text(summary, encoding="utf-8")
    (out / "metrics.csv").write_text(report.pooled.to_csv(), encoding="utf-8")
    (out / "folds.csv").write_text("fold,macro_f1\n" + "".join(
        f"{i},{f:.6f}\n" for i, f in enumerate(report.fold_f1)), encoding="utf-8")
    record_config(cfg, "cv", out, is_dir=True)
    print(summary, end="")
    return EXIT_OK


def cmd_tune(cfg: dict) -> int:
    X, y = dataset_xy(_load(cfg), WindowSpec(cfg["window"], cfg["window"]))
    space = SearchSpace(n_iters=cfg["iters"], seed=cfg["seed"])
    result = randomized_search(X, y, space, k=cfg["k"], seed=cfg["seed"], base_params=_forest_params(cfg))
    out = _outdir(cfg, "tune_out")
    (out / "trials.csv").write_text(result.log_csv(), encoding="utf-8")
    (out / "best_params.json").write_text(json.dumps(
        {"params": result.best_params.to_dict(), "mean_f1": result.best_mean_f1}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    record_config(cfg, "tune", out, is_dir=True)
    default = result.trials[0].mean_f1
    print(f"{len(result.trials)} trials; default config {default:.4f} -> best {result.best_mean_f1:.4f}")
    print(json.dumps(result.best_params.to_dict(), sort_keys=True))
    return EXIT_OK


def cmd_compare(cfg: dict) -> int:
    X, y = dataset_xy(_load(cfg), WindowSpec(cfg["window"], cfg["window"]))
    rows = train_baselines(X, y, k=cfg["k"], seed=cfg["seed"])
    out = _outdir(cfg, "compare_out")
    (out / "comparison.csv").write_text(comparison_csv(rows), encoding="utf-8")
    record_config(cfg, "compare", out, is_dir=True)
    for name, f1 in rows:
        print(f"{name:>20} {f1:.4f}")
    return EXIT_OK


def _split_listen(listen: str) -> tuple[str, int]:
    host, _, port = listen.rpartition(":")
    return host or "127.0.0.1", int(port)


def cmd_serve(cfg: dict) -> int:
    _require(cfg, "model")
    service = PredictionService(load_model(cfg["model"]))
    host, port = _split_listen(cfg["listen"])
    server = make_server(service, host, port)
    print(f"serving {service.version} on http://{host}:{server.server_address[1]}/predict", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def run_replay(cfg: dict, client, **pacing) -> tuple:
    """Replay ``cfg["data"]`` through ``client``, feeding each prediction to a
    fresh scheduler. ``pacing`` may override ``sleep`` and ``clock``."""
    dataset = _load(cfg)
    scheduler = SoundScheduler(build_placeholder_library(cfg["clip_seed"]), seed=cfg["clip_seed"])

    def on_response(row):
        if row.predicted is not None:
            scheduler.next_action(row.predicted, row.window_start_ms)

    report = replay(dataset, client, pace=cfg["pace"], session_id=cfg["session"],
                    window_len=cfg["window"], on_response=on_response, **pacing)
    return report, scheduler


def cmd_replay(cfg: dict) -> int:
    if cfg["pace"] not in ("realtime", "accelerated"):
        raise UsageError(f"--pace must be realtime or accelerated, got {cfg['pace']!r}")
    out = _outdir(cfg, "replay_out")
    record_config(cfg, "replay", out, is_dir=True)
    try:
        report, scheduler = run_replay(cfg, HttpPredictClient(cfg["endpoint"]))
    except PipelineRuntimeError as exc:
        partial = getattr(exc, "report", None)
        if partial is not None:
            (out / "replay_report.csv").write_text(partial.to_csv(), encoding="utf-8")
        raise
    (out / "replay_report.csv").write_text(report.to_csv(), encoding="utf-8")
    (out / "events.csv").write_text(scheduler.events_csv(), encoding="utf-8")
    metrics = report.metrics
    print(f"{report.requests_sent} requests, {len(scheduler.history)} playback events")
    if metrics is not None:
        print(metrics.format_table())
    return EXIT_OK


def cmd_clips(cfg: dict) -> int:
    out = _outdir(cfg, "clips")
    paths = write_library(build_placeholder_library(cfg["clip_seed"]), out)
    record_config(cfg, "clips", out, is_dir=True)
    print(f"wrote {len(paths)} clips to {out}")
    return EXIT_OK


COMMANDS = {
    "gen": (cmd_gen, GEN_OPTS, "generate a synthetic labelled IMU dataset"),
    "train": (cmd_train, ["data", "model"] + FOREST_OPTS, "train a random forest and save it"),
    "cv": (cmd_cv, ["data", "k", "out"] + FOREST_OPTS, "k-fold cross-validate the random forest"),
    "tune": (cmd_tune, ["data", "k", "iters", "out"] + FOREST_OPTS, "randomized hyperparameter search"),
    "compare": (cmd_compare, ["data", "k", "out", "seed", "window"], "cross-validate all comparison models"),
    "serve": (cmd_serve, ["model", "listen"], "run the prediction service"),
    "replay": (cmd_replay, ["data", "endpoint", "pace", "out", "clip_seed", "window", "session"],
               "stream a dataset through the service and the sound scheduler"),
    "clips": (cmd_clips, ["clip_seed", "out"], "write the placeholder clip library as WAV files"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gustosonic", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, opts, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON file of option defaults")
        _add(p, *dict.fromkeys(opts))
    return parser


def main(argv: list[str] | None = None, env=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    func, opts, _ = COMMANDS[args.command]
    try:
        cfg = resolve(args, list(dict.fromkeys(opts)), os.environ if env is None else env)
        return func(cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ValueError, OSError) as exc:
        if isinstance(exc, (ConnectionError, TimeoutError)):
            print(f"runtime error: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        print(f"data error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except PipelineRuntimeError as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def run() -> None:
    sys.exit(main())

