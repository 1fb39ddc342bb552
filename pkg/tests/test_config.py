import pytest

from config import Config, DeskConfig, RealDataConfig, get_config, validate_config
from models.model_config import Backbone, ModelConfig
from models.train_config import Schedule, TrainConfig
from utils.error_handlers import ValidationError


def test_get_config_presets():
    assert get_config("desk") is DeskConfig
    assert get_config("real") is RealDataConfig
    assert get_config("REAL") is RealDataConfig


def test_get_config_reads_environment(monkeypatch):
    monkeypatch.setenv("ATTNSEG_PRESET", "real")
    assert get_config() is RealDataConfig
    monkeypatch.delenv("ATTNSEG_PRESET")
    assert get_config() is DeskConfig


def test_presets_are_valid():
    assert validate_config(DeskConfig)
    assert validate_config(RealDataConfig)


def test_validate_config_collects_every_error():
    class Broken(DeskConfig):
        LEARNING_RATE = 0.0
        LOSS_LAMBDA = 1.5
        MASK_THRESHOLD = 1.0

    with pytest.raises(ValueError) as exc_info:
        validate_config(Broken)
    message = str(exc_info.value)
    for name in ("LEARNING_RATE", "LOSS_LAMBDA", "MASK_THRESHOLD"):
        assert name in message


def test_train_config_defaults():
    config = TrainConfig.from_config(DeskConfig).validate()
    assert config.lr == pytest.approx(5e-4)
    assert config.weight_decay == pytest.approx(1e-5)
    assert config.lambda_ == pytest.approx(0.6)
    assert config.schedule == Schedule.CONSTANT
    assert config.deterministic


def test_train_config_overrides_skip_none():
    config = TrainConfig.from_config(DeskConfig, lr=None, epochs=3)
    assert config.lr == Config.LEARNING_RATE
    assert config.epochs == 3


def test_train_config_copy_keeps_overrides():
    config = TrainConfig().copy(lambda_=1.0, epochs=2)
    assert config.lambda_ == 1.0
    assert config.epochs == 2
    assert TrainConfig.from_dict(config.to_dict()).to_dict() == config.to_dict()


@pytest.mark.parametrize("field, value", [
    ("lr", 0.0), ("weight_decay", -1e-3), ("lambda_", 1.2), ("epochs", 0),
    ("batch_size", 0), ("mask_threshold", 0.0), ("optimizer", "sgd"),
])
def test_train_config_rejects(field, value):
    with pytest.raises(ValidationError):
        TrainConfig(**{field: value}).validate()


def test_model_config_from_presets():
    desk = ModelConfig.from_config(DeskConfig).validate()
    assert desk.backbone == Backbone.DESK_SMALL
    assert desk.attention_spatial and desk.attention_classgate
    assert desk.selfattn_embed_channels == max(desk.decoder_channels // 8, 1)

    real = ModelConfig.from_config(RealDataConfig).validate()
    assert real.backbone == Backbone.DEEPLABV3PLUS
    assert real.input_size == 512


@pytest.mark.parametrize("overrides", [
    {"input_size": 40},
    {"encoder_channels": [8, 8, 8]},
    {"backbone": "deeplabv3plus", "input_size": 48},
    {"input_size": 16},
    {"backbone": "deeplabv3plus", "input_size": 32},
])
def test_model_config_rejects(overrides):
    with pytest.raises(ValidationError):
        ModelConfig().copy(**overrides).validate()


def test_smallest_accepted_inputs_leave_a_two_by_two_map():
    assert ModelConfig(input_size=32).validate().coarsest_size == 2
    deeplab = ModelConfig(backbone=Backbone.DEEPLABV3PLUS, input_size=64).validate()
    assert deeplab.coarsest_size == 2
