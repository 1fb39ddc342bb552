from enum import Enum
from typing import Dict, List, Optional

from utils.error_handlers import ValidationError
from utils.validation import validate_positive_int


class Backbone(Enum):
    DESK_SMALL = "desk_small"
    DEEPLABV3PLUS = "deeplabv3plus"


class InitMode(Enum):
    RANDOM = "random"
    PRETRAINED_ENCODER = "pretrained-encoder"


class ModelConfig:
    """Architecture hyperparameters of the joint classification/segmentation network"""

    def __init__(self, backbone: Backbone = Backbone.DESK_SMALL, input_size: int = 64,
                 encoder_channels: List[int] = None, decoder_channels: int = 32,
                 attention_spatial: bool = True, attention_classgate: bool = True,
                 selfattn_embed_channels: Optional[int] = None, classifier_hidden: int = 0,
                 classification_branch: bool = True):
        self.backbone = Backbone(backbone)
        self.input_size = input_size
        self.encoder_channels = list(encoder_channels or [16, 32, 64, 128])
        self.decoder_channels = decoder_channels
        self.attention_spatial = attention_spatial
        self.attention_classgate = attention_classgate
        # embedding width defaults to max(C//8, 1) of the attended features
        self.selfattn_embed_channels = (selfattn_embed_channels if selfattn_embed_channels is not None
                                        else max(decoder_channels // 8, 1))
        self.classifier_hidden = classifier_hidden
        self.classification_branch = classification_branch

    @property
    def attention_channels(self) -> int:
        """Channel count of the features the spatial block is applied to"""
        return self.decoder_channels

    @property
    def coarsest_size(self) -> int:
        """Side of the coarsest encoder map"""
        stride = 32 if self.backbone == Backbone.DEEPLABV3PLUS else 2 ** len(self.encoder_channels)
        return self.input_size // stride

    @property
    def is_multitask(self) -> bool:
        return self.classification_branch

    def validate(self) -> "ModelConfig":
        validate_positive_int(self.input_size, "input_size", minimum=8)
        validate_positive_int(self.decoder_channels, "decoder_channels")
        if not self.encoder_channels:
            raise ValidationError("encoder_channels must not be empty", "encoder_channels")
        for width in self.encoder_channels:
            validate_positive_int(width, "encoder_channels")
        if self.backbone == Backbone.DESK_SMALL:
            if len(self.encoder_channels) != 4:
                raise ValidationError("desk_small expects 4 encoder widths",
                                      "encoder_channels", self.encoder_channels)
            if self.input_size % 16:
                raise ValidationError("desk_small input_size must be a multiple of 16",
                                      "input_size", self.input_size)
        elif self.input_size % 32:
            raise ValidationError("deeplabv3plus input_size must be a multiple of 32",
                                  "input_size", self.input_size)
        if self.coarsest_size < 2:
            raise ValidationError(
                f"input_size {self.input_size} leaves a 1×1 coarsest map; batch norm needs at least 2×2",
                "input_size", self.input_size
            )
        validate_positive_int(self.selfattn_embed_channels, "selfattn_embed_channels")
        if self.selfattn_embed_channels > self.attention_channels:
            raise ValidationError(
                f"selfattn_embed_channels ({self.selfattn_embed_channels}) exceeds the "
                f"{self.attention_channels} channels of the attended features",
                "selfattn_embed_channels", self.selfattn_embed_channels
            )
        validate_positive_int(self.classifier_hidden, "classifier_hidden", minimum=0)
        if self.attention_classgate and not self.classification_branch:
            raise ValidationError("the classification gate needs the classification branch",
                                  "attention_classgate", self.attention_classgate)
        return self

    def copy(self, **overrides) -> "ModelConfig":
        data = self.to_dict()
        data.update(overrides)
        return ModelConfig.from_dict(data)

    def to_dict(self) -> Dict:
        return {
            "backbone": self.backbone.value,
            "input_size": self.input_size,
            "encoder_channels": list(self.encoder_channels),
            "decoder_channels": self.decoder_channels,
            "attention_spatial": self.attention_spatial,
            "attention_classgate": self.attention_classgate,
            "selfattn_embed_channels": self.selfattn_embed_channels,
            "classifier_hidden": self.classifier_hidden,
            "classification_branch": self.classification_branch,
        }

    @classmethod
    def from_dict(cls, data: Dict):
        return cls(
            backbone=Backbone(data.get("backbone", "desk_small")),
            input_size=data.get("input_size", 64),
            encoder_channels=data.get("encoder_channels"),
            decoder_channels=data.get("decoder_channels", 32),
            attention_spatial=data.get("attention_spatial", True),
            attention_classgate=data.get("attention_classgate", True),
            selfattn_embed_channels=data.get("selfattn_embed_channels"),
            classifier_hidden=data.get("classifier_hidden", 0),
            classification_branch=data.get("classification_branch", True),
        )

    @classmethod
    def from_config(cls, config_class, **overrides):
        """Build from a config preset (config.DeskConfig / config.RealDataConfig)"""
        data = {
            "backbone": config_class.BACKBONE,
            "input_size": config_class.INPUT_SIZE,
            "encoder_channels": config_class.ENCODER_CHANNELS,
            "decoder_channels": config_class.DECODER_CHANNELS,
        }
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(data)
