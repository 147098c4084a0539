import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gustosonic.featurize import windows_to_xy  # noqa: E402
from gustosonic.learn.forest import ForestParams  # noqa: E402
from gustosonic.pipeline import train_model  # noqa: E402
from gustosonic.sensor_data import LABELS  # noqa: E402
from gustosonic.synthgen import GeneratorSpec, generate_dataset  # noqa: E402


@pytest.fixture(scope="session")
def default_dataset():
    return generate_dataset(GeneratorSpec())


@pytest.fixture(scope="session")
def default_xy(default_dataset):
    X, y, _ = windows_to_xy(default_dataset)
    return X, y


@pytest.fixture(scope="session")
def five_class_dataset():
    return generate_dataset(GeneratorSpec(activities=LABELS))


@pytest.fixture(scope="session")
def five_class_model(five_class_dataset):
    """Forest trained on every activity including idle."""
    return train_model(five_class_dataset, ForestParams(n_trees=30, seed=0))


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    status = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(rep, "user_properties", []))
            if "criterion" not in props:
                continue
            if rep.when == "call" or rep.failed:
                ok = outcome == "passed" and status.get(props["criterion"], ("PASS",))[0] == "PASS"
                status[props["criterion"]] = ("PASS" if ok else "FAIL", props.get("detail", ""))
    if status:
        terminalreporter.section("acceptance criteria")
        for num in sorted(status):
            terminalreporter.write_line(f"{status[num][0]} criterion {num:>2}: {status[num][1]}")
