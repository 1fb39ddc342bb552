import logging
from typing import Dict, List, Optional

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from config import Config
from models.model_config import InitMode, ModelConfig
from models.outputs import SegClassOutput
from network.attention import ClassificationGate, SpatialSelfAttention
from network.backbones import build_backbone
from utils.error_handlers import ShapeError, ValidationError

logger = logging.getLogger('attnseg.network')


def classification_head(encoder_features: torch.Tensor, weight: torch.Tensor,
                        bias: torch.Tensor) -> torch.Tensor:
    """Global average pooling over (h, w), then an affine map to one logit per image"""
    if encoder_features.dim() != 4:
        raise ShapeError(f"expected (batch, C, h, w) features, got {tuple(encoder_features.shape)}")
    pooled = encoder_features.mean(dim=(2, 3))
    return F.linear(pooled, weight, bias).squeeze(-1)


class ClassificationHead(nn.Module):
    """
    Classification branch on the coarsest encoder features. With hidden > 0 a ReLU
    hidden layer sits between the pooled vector and the logit.
    """

    def __init__(self, in_channels: int, hidden: int = 0,
                 init_std: float = Config.CLASSIFIER_INIT_STD):
        super().__init__()
        if hidden:
            self.hidden = nn.Linear(in_channels, hidden)
            self.out = nn.Linear(hidden, 1)
        else:
            self.hidden = None
            self.out = nn.Linear(in_channels, 1)
        for layer in (self.hidden, self.out):
            if layer is not None:
                nn.init.normal_(layer.weight, mean=0.0, std=init_std)
                nn.init.zeros_(layer.bias)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        if self.hidden is None:
            return classification_head(features, self.out.weight, self.out.bias)
        pooled = F.relu(self.hidden(features.mean(dim=(2, 3))))
        return self.out(pooled).squeeze(-1)


class SegClassNet(nn.Module):
    """
    encoder -> classification head on the coarsest map -> s(x)
    encoder -> decoder -> spatial self-attention -> 1×1 projection A(x)
            -> upsample to input size -> A + α·s·A
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.encoder, self.decoder = build_backbone(config)
        self.seg_projection = nn.Conv2d(config.decoder_channels, 1, kernel_size=1)
        self.classifier = (ClassificationHead(self.encoder.out_channels[-1], config.classifier_hidden)
                           if config.classification_branch else None)
        # attention modules are built last so the shared layers draw the same
        # initial weights whether or not attention is enabled
        self.spatial_attention = (SpatialSelfAttention(config.decoder_channels,
                                                       config.selfattn_embed_channels)
                                  if config.attention_spatial else None)
        self.gate = ClassificationGate() if config.attention_classgate else None
        self.use_spatial = self.spatial_attention is not None
        self.use_classgate = self.gate is not None

    @property
    def alpha(self) -> torch.Tensor:
        if self.gate is None:
            return torch.zeros(())
        return self.gate.alpha

    def forward(self, x: torch.Tensor) -> Dict[str, Optional[torch.Tensor]]:
        size = self.config.input_size
        if x.dim() != 4 or x.shape[1] != 3 or tuple(x.shape[2:]) != (size, size):
            raise ShapeError(f"expected input (batch, 3, {size}, {size}), got {tuple(x.shape)}",
                             (3, size, size), tuple(x.shape[1:]))

        features = self.encoder(x)
        class_logit = self.classifier(features[-1]) if self.classifier is not None else None

        decoded = self.decoder(features)
        if self.use_spatial:
            decoded = self.spatial_attention(decoded)
        seg_features = self.seg_projection(decoded)
        seg_features = F.interpolate(seg_features, size=x.shape[2:], mode="bilinear",
                                     align_corners=False)
        if self.use_classgate:
            seg_features = self.gate(seg_features, torch.sigmoid(class_logit))

        return {"seg_logits": seg_features, "class_logit": class_logit, "alpha": self.alpha}


def build_model(config: ModelConfig, init: InitMode = InitMode.RANDOM,
                weights_path: Optional[str] = None, seed: int = 0) -> SegClassNet:
    """
    Construct the network with seeded initialization: classifier weights N(0, 0.05²),
    α = 0, encoder optionally loaded from a weight file.

    Raises:
        ValidationError: invalid config, or pretrained init without a weight file
        CheckpointError: weight file missing, unreadable or incompatible with the backbone
    """
    config.validate()
    init = InitMode(init)
    torch.manual_seed(seed)
    model = SegClassNet(config)

    if init == InitMode.PRETRAINED_ENCODER:
        if not weights_path:
            raise ValidationError("pretrained-encoder init needs a weight file", "weights_path")
        from network.checkpoint import load_encoder_weights

        load_encoder_weights(model, weights_path)

    n_params = sum(p.numel() for p in model.parameters())
    logger.info(f"🧠 Built {config.backbone.value} model ({n_params:,} parameters, "
                f"spatial={config.attention_spatial}, classgate={config.attention_classgate}, "
                f"classifier={config.classification_branch})")
    return model


def images_to_tensor(images: List[np.ndarray], input_size: int) -> torch.Tensor:
    """List of H×W×3 float arrays -> (batch, 3, H, W) tensor"""
    for index, image in enumerate(images):
        if image.ndim != 3 or image.shape != (input_size, input_size, 3):
            raise ShapeError(f"image {index}: expected ({input_size}, {input_size}, 3), "
                             f"got {image.shape}", (input_size, input_size, 3), image.shape)
    batch = np.stack([np.asarray(image, dtype=np.float32) for image in images])
    return torch.from_numpy(np.ascontiguousarray(batch.transpose(0, 3, 1, 2)))


def outputs_from_tensors(result: Dict[str, Optional[torch.Tensor]]) -> List[SegClassOutput]:
    seg_logits = result["seg_logits"].detach()
    seg_prob = torch.sigmoid(seg_logits)
    class_logit = result["class_logit"]
    class_prob = torch.sigmoid(class_logit).detach() if class_logit is not None else None
    alpha = float(result["alpha"].detach())
    outputs = []
    for i in range(seg_logits.shape[0]):
        outputs.append(SegClassOutput(
            seg_logits[i, 0].cpu().numpy(),
            float(class_logit[i].detach()) if class_logit is not None else None,
            alpha,
            seg_prob=seg_prob[i, 0].cpu().numpy(),
            class_prob=float(class_prob[i]) if class_prob is not None else None,
        ))
    return outputs


@torch.no_grad()
def forward(model: SegClassNet, image: np.ndarray) -> SegClassOutput:
    """Single-image forward pass in eval mode"""
    was_training = model.training
    model.eval()
    try:
        result = model(images_to_tensor([image], model.config.input_size))
    finally:
        model.train(was_training)
    return outputs_from_tensors(result)[0]
