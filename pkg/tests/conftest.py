import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from linkprint.config import ExperimentConfig  # noqa: E402
from linkprint.dataset import LabeledDataset  # noqa: E402
from linkprint.probe import ProbeConfig  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def small_probe():
    return ProbeConfig(access_num=500, repeat_num=3, buffer_size_bytes=4, buffer_num=40)


@pytest.fixture
def small_config(small_probe):
    """A fast closed-world config: few traces, forest only, no CV."""
    return ExperimentConfig(probe=small_probe, traces_per_class=12, models=("forest",),
                            cv_folds=0, repetitions=2)


@pytest.fixture
def blobs():
    """Three well separated Gaussian blobs in 6-D, 20 rows each."""
    rng = np.random.default_rng(7)
    centers = np.array([[0.0] * 6, [4.0] * 6, [0.0, 8.0, 0.0, 8.0, 0.0, 8.0]])
    X = np.vstack([c + 0.3 * rng.standard_normal((20, 6)) for c in centers])
    labels = ["a"] * 20 + ["b"] * 20 + ["c"] * 20
    return LabeledDataset(X, labels)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
    passed = sum(line.startswith("[PASS]") for line in results.values())
    terminalreporter.write_line(f"{passed}/{len(results)} criteria passed")
