from pathlib import Path
from typing import Callable

import numpy as np
import pytest
import torch

from crossview.datamodel import BYTE, Image
from crossview.scene import make_synthetic_dataset
from crossview.trainer import TrainConfig
from crossview.utils import load_manifest


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run desk-scale training checks")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: desk-scale training, only with --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return

    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def _seeded():
    torch.manual_seed(0)
    np.random.seed(0)


@pytest.fixture(scope="session")
def data_dir(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("data")
    make_synthetic_dataset(8, seed=0, size=64, out_dir=root / "train")
    make_synthetic_dataset(4, seed=1, size=64, out_dir=root / "test", split="test")

    return root


@pytest.fixture(scope="session")
def train_manifest(data_dir):
    return load_manifest(data_dir / "train")


@pytest.fixture(scope="session")
def test_manifest(data_dir):
    return load_manifest(data_dir / "test")


@pytest.fixture
def make_config(tmp_path) -> Callable[..., TrainConfig]:
    """
    Narrow, one-epoch CPU configs writing under tmp_path
    """

    def make(arch: str = "baseline", **overrides) -> TrainConfig:
        options = dict(arch=arch, resolution=64, epochs=1, batch_size=4, base_channels=8, seed=0,
                       out_dir=str(tmp_path / f"run_{arch}"), device="cpu", progress=False, preview_samples=2)
        options.update(overrides)

        return TrainConfig(**options)

    return make


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def random_image(rng) -> Callable[[int, int], Image]:
    def make(height: int, width: int) -> Image:
        return Image(rng.integers(0, 256, size=(height, width, 3)).astype(np.float64), BYTE)

    return make
