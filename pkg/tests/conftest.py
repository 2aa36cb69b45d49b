import sys
from pathlib import Path

import numpy as np
import pytest

from blurbench.imaging import Image
from blurbench.ingest import (
    parse_blur_flags,
    parse_captions,
    parse_feature_counts,
    parse_predictions,
)

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def toy_dataset():
    return parse_captions((DATA_DIR / "toy_captions.json").read_bytes())


@pytest.fixture(scope="session")
def toy_predictions():
    return parse_predictions((DATA_DIR / "toy_predictions.json").read_bytes())


@pytest.fixture(scope="session")
def toy_feature_records():
    return parse_feature_counts((DATA_DIR / "toy_feature_counts.csv").read_bytes())


@pytest.fixture(scope="session")
def toy_flags():
    return parse_blur_flags((DATA_DIR / "toy_flags.csv").read_bytes())


def random_image(rng: np.random.Generator, width: int, height: int,
                 channels: int) -> Image:
    samples = rng.integers(0, 256, size=(height, width, channels),
                           dtype=np.uint8)
    return Image(width, height, channels, samples)


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    status = "PASS" if report.passed else "FAIL"
    name = report.nodeid.split("::")[-1]
    sys.stderr.write(f"\n[acceptance] {status} {name}\n")
