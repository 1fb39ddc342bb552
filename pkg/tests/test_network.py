import numpy as np
import pytest
import torch

from models.model_config import Backbone, InitMode, ModelConfig
from network.checkpoint import (
    encode_state, load_checkpoint, load_encoder_weights, save_checkpoint
)
from network.segclass_net import (
    ClassificationHead, build_model, classification_head, forward, images_to_tensor
)
from utils.error_handlers import CheckpointError, ShapeError, ValidationError


def _plain(config):
    return config.copy(attention_spatial=False, attention_classgate=False)


def _batch(size, n=2, seed=0):
    generator = torch.Generator().manual_seed(seed)
    return torch.rand(n, 3, size, size, generator=generator)


# --- build_model ---

def test_fresh_model_has_zero_alpha_and_classifier_std():
    model = build_model(ModelConfig(classifier_hidden=16), seed=0)
    assert model.alpha.item() == 0.0
    weights = model.classifier.hidden.weight.detach().numpy().ravel()
    assert weights.size >= 1000
    assert 0.04 <= weights.std() <= 0.06
    assert torch.count_nonzero(model.classifier.out.bias) == 0


def test_build_model_is_deterministic(tiny_model_config):
    first = build_model(tiny_model_config, seed=4).state_dict()
    second = build_model(tiny_model_config, seed=4).state_dict()
    assert first.keys() == second.keys()
    for name in first:
        assert torch.equal(first[name], second[name]), name


def test_embedding_wider_than_features_is_rejected(tiny_model_config):
    with pytest.raises(ValidationError):
        build_model(tiny_model_config.copy(selfattn_embed_channels=64))


def test_gate_without_classifier_is_rejected(tiny_model_config):
    with pytest.raises(ValidationError):
        build_model(tiny_model_config.copy(classification_branch=False))


def test_pretrained_init_needs_weights(tiny_model_config):
    with pytest.raises(ValidationError):
        build_model(tiny_model_config, init=InitMode.PRETRAINED_ENCODER)


# --- classification_head ---

def test_classification_head_on_constant_features():
    features = torch.full((1, 5, 3, 3), 0.7, dtype=torch.float64)
    logit = classification_head(features, torch.ones(1, 5, dtype=torch.float64),
                                torch.zeros(1, dtype=torch.float64))
    assert logit.item() == pytest.approx(5 * 0.7)


def test_classification_head_on_zero_features():
    head = ClassificationHead(8)
    with torch.no_grad():
        head.out.bias.zero_()
        logit = head(torch.zeros(2, 8, 4, 4))
    assert torch.equal(logit, torch.zeros(2))
    assert torch.sigmoid(logit)[0].item() == 0.5


def test_classification_head_ignores_spatial_order():
    head = ClassificationHead(6).double()
    features = torch.randn(1, 6, 4, 4, dtype=torch.float64)
    perm = torch.randperm(16, generator=torch.Generator().manual_seed(1))
    permuted = features.flatten(2)[:, :, perm].reshape(1, 6, 4, 4)
    with torch.no_grad():
        torch.testing.assert_close(head(features), head(permuted))


# --- forward ---

def test_forward_shapes(tiny_model_config):
    model = build_model(tiny_model_config).eval()
    with torch.no_grad():
        result = model(_batch(32, n=3))
    assert result["seg_logits"].shape == (3, 1, 32, 32)
    assert result["class_logit"].shape == (3,)


def test_seg_only_has_no_class_logit(tiny_model_config):
    model = build_model(_plain(tiny_model_config).copy(classification_branch=False)).eval()
    with torch.no_grad():
        assert model(_batch(32))["class_logit"] is None


def test_forward_rejects_wrong_size(tiny_model_config):
    model = build_model(tiny_model_config)
    with pytest.raises(ShapeError):
        model(_batch(64))
    with pytest.raises(ShapeError):
        forward(model, np.zeros((16, 16, 3), np.float32))


def test_attention_flags_off_match_plain_network(tiny_model_config):
    full = build_model(tiny_model_config, seed=2).eval()
    plain = build_model(_plain(tiny_model_config), seed=2).eval()
    full.use_spatial = False
    x = _batch(32)
    with torch.no_grad():
        full_out = full(x)
        plain_out = plain(x)
    assert torch.equal(full_out["seg_logits"], plain_out["seg_logits"])
    assert torch.equal(full_out["class_logit"], plain_out["class_logit"])


def test_fresh_gate_is_identity(tiny_model_config):
    model = build_model(tiny_model_config, seed=3).eval()
    x = _batch(32)
    with torch.no_grad():
        gated = model(x)["seg_logits"]
        model.use_classgate = False
        ungated = model(x)["seg_logits"]
    assert torch.equal(gated, ungated)


def test_forward_is_deterministic(tiny_model_config):
    model = build_model(tiny_model_config, seed=5)
    image = np.random.default_rng(0).random((32, 32, 3)).astype(np.float32)
    first = forward(model, image)
    second = forward(model, image)
    assert first.seg_logits.tobytes() == second.seg_logits.tobytes()
    assert first.class_logit == second.class_logit
    assert 0.0 <= first.class_prob <= 1.0
    assert first.seg_prob.shape == (32, 32)


def test_gradient_reaches_classifier_through_gate(tiny_model_config):
    model = build_model(tiny_model_config, seed=6)
    with torch.no_grad():
        model.gate.alpha.fill_(0.5)
    result = model(_batch(32))
    result["seg_logits"].sum().backward()
    assert model.classifier.out.weight.grad is not None
    assert torch.count_nonzero(model.classifier.out.weight.grad) > 0


def test_images_to_tensor_layout():
    image = np.zeros((16, 16, 3), np.float32)
    image[..., 1] = 1.0
    tensor = images_to_tensor([image], 16)
    assert tensor.shape == (1, 3, 16, 16)
    assert tensor[0, 1].min().item() == 1.0 and tensor[0, 0].max().item() == 0.0


@pytest.mark.slow
def test_deeplab_backbone_forward():
    config = ModelConfig(backbone=Backbone.DEEPLABV3PLUS, input_size=64,
                         encoder_channels=[64, 128, 256, 64], decoder_channels=32)
    model = build_model(config).eval()
    with torch.no_grad():
        result = model(_batch(64))
    assert result["seg_logits"].shape == (2, 1, 64, 64)
    assert result["class_logit"].shape == (2,)


# --- checkpoints ---

def test_checkpoint_round_trip_restores_outputs(tmp_path, tiny_model_config):
    model = build_model(tiny_model_config, seed=7).eval()
    path = str(tmp_path / "m.ckpt")
    save_checkpoint(model, path, extra={"epoch": 3})

    restored, extra = load_checkpoint(path)
    assert extra == {"epoch": 3}
    x = _batch(32)
    with torch.no_grad():
        assert torch.equal(model(x)["seg_logits"], restored(x)["seg_logits"])


def test_identical_parameters_give_identical_bytes(tiny_model_config):
    first = build_model(tiny_model_config, seed=8)
    second = build_model(tiny_model_config, seed=8)
    assert (encode_state(first.state_dict(), first.config)
            == encode_state(second.state_dict(), second.config))


def test_corrupt_checkpoint_is_rejected(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"something else\n")
    with pytest.raises(CheckpointError):
        load_checkpoint(str(path))


def test_encoder_weights_from_torch_file(tmp_path, tiny_model_config):
    source = build_model(tiny_model_config, seed=9)
    path = str(tmp_path / "encoder.pt")
    torch.save({f"encoder.{k}": v for k, v in source.encoder.state_dict().items()}, path)

    model = build_model(tiny_model_config, init=InitMode.PRETRAINED_ENCODER, weights_path=path, seed=10)
    for name, tensor in source.encoder.state_dict().items():
        assert torch.equal(model.encoder.state_dict()[name], tensor)


def test_incompatible_encoder_weights_list_tensor_names(tmp_path, tiny_model_config):
    other = build_model(tiny_model_config.copy(encoder_channels=[8, 8, 16, 16]), seed=0)
    path = str(tmp_path / "encoder.pt")
    torch.save(other.encoder.state_dict(), path)

    model = build_model(tiny_model_config)
    with pytest.raises(CheckpointError) as exc_info:
        load_encoder_weights(model, path)
    assert any(name.startswith("shape:") for name in exc_info.value.tensor_names)


def _deeplab_config():
    return ModelConfig(backbone=Backbone.DEEPLABV3PLUS, input_size=64,
                       encoder_channels=[64, 128, 256, 64], decoder_channels=32)


def test_torchvision_resnet_weights_initialize_the_trunk(tmp_path):
    from torchvision.models import resnet18

    torch.manual_seed(11)
    source = resnet18(weights=None).state_dict()
    path = str(tmp_path / "resnet18.pth")
    torch.save(source, path)

    model = build_model(_deeplab_config(), init=InitMode.PRETRAINED_ENCODER, weights_path=path)
    encoder = model.encoder.state_dict()
    assert torch.equal(encoder["stem.0.weight"], source["conv1.weight"])
    assert torch.equal(encoder["stem.1.running_var"], source["bn1.running_var"])
    assert torch.equal(encoder["layer4.1.conv2.weight"], source["layer4.1.conv2.weight"])
    assert not any(name.startswith("fc.") for name in encoder)


def test_torchvision_weights_missing_a_trunk_tensor_are_rejected(tmp_path):
    from torchvision.models import resnet18

    state = resnet18(weights=None).state_dict()
    del state["layer3.0.conv1.weight"]
    path = str(tmp_path / "resnet18.pth")
    torch.save(state, path)

    model = build_model(_deeplab_config())
    with pytest.raises(CheckpointError) as exc_info:
        load_encoder_weights(model, path)
    assert exc_info.value.tensor_names == ["missing:layer3.0.conv1.weight"]


def test_missing_weight_file_is_a_checkpoint_error(tmp_path, tiny_model_config):
    with pytest.raises(CheckpointError):
        build_model(tiny_model_config, init=InitMode.PRETRAINED_ENCODER,
                    weights_path=str(tmp_path / "absent.pt"))
