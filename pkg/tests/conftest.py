from datetime import datetime

import numpy as np
import pytest

from pvstack.config import RunConfig
from pvstack.synthetic import generate, write_csv


@pytest.fixture(scope="session")
def synthetic_csv(tmp_path_factory):
    """Hourly zone-1 data from 2013-01-01 00:00 to 2013-02-15 00:00."""
    path = tmp_path_factory.mktemp("data") / "solar.csv"
    write_csv(path, generate(datetime(2012, 12, 31, 23), datetime(2013, 2, 15), zones=(1,), seed=3))
    return path


def small_config(csv_path, out_dir, **extra) -> RunConfig:
    """A scaled-down protocol: 3 weeks train, 1 week validation, 7 test days."""
    overrides = [
        f'data.weather_path="{csv_path}"',
        f'data.power_path="{csv_path}"',
        'split.train_start="2013-01-01T00:00"',
        'split.train_end="2013-01-22T00:00"',
        'split.validation_end="2013-01-29T00:00"',
        'split.test_days=["2013-02-01","2013-02-02","2013-02-03","2013-02-04","2013-02-05","2013-02-06","2013-02-07"]',
        "knn.k=25",
        "qrf.n_trees=15",
        "nn.max_epochs=60",
        f'run.output_dir="{out_dir}"',
    ]
    overrides += [f"{k}={v}" for k, v in extra.items()]
    return RunConfig().with_overrides(overrides).validate()


# verdict lines from test_acceptance.py, repeated in the terminal summary
ACCEPTANCE_LINES = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
