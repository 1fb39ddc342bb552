import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from models.model_config import ModelConfig
from models.sample import SynthConfig
from models.train_config import TrainConfig
from services.dataset_service import save_corpus, split
from services.synthetic_service import generate_synthetic


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run the desk-scale training checks")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def tiny_synth_config():
    return SynthConfig(n_images=20, image_size=32, fire_fraction=0.5, distractor_fraction=0.5,
                       min_blob_area=12, max_blob_area=120, seed=3)


@pytest.fixture
def tiny_manifest(tiny_synth_config):
    return split(generate_synthetic(tiny_synth_config), seed=3)


@pytest.fixture
def tiny_model_config():
    return ModelConfig(input_size=32, encoder_channels=[4, 8, 8, 16], decoder_channels=8)


@pytest.fixture
def tiny_train_config(tmp_path):
    return TrainConfig(epochs=2, batch_size=4, input_size=32, seed=0,
                       checkpoint_dir=str(tmp_path / "ckpt"))


@pytest.fixture
def dataset_dir(tmp_path, tiny_manifest):
    root = tmp_path / "ds"
    save_corpus(tiny_manifest, str(root))
    return str(root)
