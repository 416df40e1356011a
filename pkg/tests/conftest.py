from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"
MNIST_IMAGES = DATA / "mnist" / "mnist5k-images-idx3-ubyte.gz"
MNIST_LABELS = DATA / "mnist" / "mnist5k-labels-idx1-ubyte.gz"
TRAIN_IMAGES = DATA / "images" / "train"
TEST_IMAGES = DATA / "images" / "test"

# (criterion number, title, passed, detail) collected by the acceptance suite
ACCEPTANCE_RESULTS = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def record_criterion():
    def record(number, title, passed, detail=""):
        ACCEPTANCE_RESULTS.append((number, title, passed, detail))
        status = "PASS" if passed else ("SKIP" if passed is None else "FAIL")
        print(f"criterion {number:>2} [{status}] {title}: {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_RESULTS, key=lambda r: r[0]):
        status = "PASS" if passed else ("SKIP" if passed is None else "FAIL")
        terminalreporter.write_line(f"criterion {number:>2} [{status}] {title}: {detail}")
