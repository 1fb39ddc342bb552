"""
Encoder/decoder backbones behind one interface:

    encoder(x) -> list of feature maps, finest first; the last entry is the coarsest
    encoder.out_channels -> widths of those maps
    decoder(features) -> (batch, decoder_channels, h', w') features for the segmentation head
"""

from typing import Dict, List

import torch
import torch.nn as nn
import torch.nn.functional as F

from models.model_config import Backbone, ModelConfig


def conv_bn_relu(in_channels: int, out_channels: int, kernel_size: int = 3, stride: int = 1,
                 dilation: int = 1) -> nn.Sequential:
    padding = dilation * (kernel_size // 2)
    return nn.Sequential(
        nn.Conv2d(in_channels, out_channels, kernel_size, stride=stride, padding=padding,
                  dilation=dilation, bias=False),
        nn.BatchNorm2d(out_channels),
        nn.ReLU(inplace=True),
    )


class DeskEncoder(nn.Module):
    """Four strided stages (default widths 16/32/64/128), each halving the resolution"""

    def __init__(self, channels: List[int], in_channels: int = 3):
        super().__init__()
        stages = []
        previous = in_channels
        for width in channels:
            stages.append(nn.Sequential(
                conv_bn_relu(previous, width, stride=2),
                conv_bn_relu(width, width),
            ))
            previous = width
        self.stages = nn.ModuleList(stages)
        self.out_channels = list(channels)

    def forward(self, x: torch.Tensor) -> List[torch.Tensor]:
        features = []
        for stage in self.stages:
            x = stage(x)
            features.append(x)
        return features


class SkipDecoder(nn.Module):
    """
    Project the coarsest map, upsample it bilinearly to the skip resolution,
    concatenate the projected skip features and fuse with two 3×3 convolutions.
    """

    def __init__(self, coarse_channels: int, skip_channels: int, decoder_channels: int,
                 skip_index: int, skip_projection: int = 48):
        super().__init__()
        self.skip_index = skip_index
        skip_projection = min(skip_projection, skip_channels)
        self.coarse_project = conv_bn_relu(coarse_channels, decoder_channels, kernel_size=1)
        self.skip_project = conv_bn_relu(skip_channels, skip_projection, kernel_size=1)
        self.fuse = nn.Sequential(
            conv_bn_relu(decoder_channels + skip_projection, decoder_channels),
            conv_bn_relu(decoder_channels, decoder_channels),
        )
        self.out_channels = decoder_channels

    def forward(self, features: List[torch.Tensor]) -> torch.Tensor:
        skip = features[self.skip_index]
        x = self.coarse_project(features[-1])
        x = F.interpolate(x, size=skip.shape[2:], mode="bilinear", align_corners=False)
        x = torch.cat([x, self.skip_project(skip)], dim=1)
        return self.fuse(x)


class ASPP(nn.Module):
    """Atrous spatial pyramid pooling: 1×1, three dilated 3×3 branches and image pooling"""

    def __init__(self, in_channels: int, out_channels: int, rates=(6, 12, 18)):
        super().__init__()
        branches = [conv_bn_relu(in_channels, out_channels, kernel_size=1)]
        for rate in rates:
            branches.append(conv_bn_relu(in_channels, out_channels, dilation=rate))
        self.branches = nn.ModuleList(branches)
        self.image_pool = nn.Sequential(
            nn.AdaptiveAvgPool2d(1),
            nn.Conv2d(in_channels, out_channels, 1, bias=False),
            nn.ReLU(inplace=True),
        )
        self.project = conv_bn_relu(out_channels * (len(rates) + 2), out_channels, kernel_size=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        outs = [branch(x) for branch in self.branches]
        pooled = F.interpolate(self.image_pool(x), size=x.shape[2:], mode="bilinear",
                               align_corners=False)
        outs.append(pooled)
        return self.project(torch.cat(outs, dim=1))


class DeepLabV3PlusEncoder(nn.Module):
    """
    ResNet-18 trunk followed by ASPP. Returned maps: layer1 (stride 4), layer2 (stride 8),
    layer3 (stride 16), post-ASPP (stride 32). The classification branch taps the
    post-ASPP map.
    """

    TORCHVISION_RENAMES = (("conv1.", "stem.0."), ("bn1.", "stem.1."))
    # not part of an ImageNet trunk; stays at random init
    PRETRAINED_OPTIONAL = ("aspp.",)

    def __init__(self, aspp_channels: int = 256):
        super().__init__()
        from torchvision.models import resnet18

        trunk = resnet18(weights=None)
        self.stem = nn.Sequential(trunk.conv1, trunk.bn1, trunk.relu, trunk.maxpool)
        self.layer1 = trunk.layer1
        self.layer2 = trunk.layer2
        self.layer3 = trunk.layer3
        self.layer4 = trunk.layer4
        self.aspp = ASPP(512, aspp_channels)
        self.out_channels = [64, 128, 256, aspp_channels]

    def adapt_pretrained(self, state_dict: Dict[str, torch.Tensor]) -> Dict[str, torch.Tensor]:
        """Rename a torchvision ResNet-18 state dict onto this trunk; fc.* is dropped"""
        adapted = {}
        for name, tensor in state_dict.items():
            if name.startswith("fc."):
                continue
            for source, target in self.TORCHVISION_RENAMES:
                if name.startswith(source):
                    name = target + name[len(source):]
                    break
            adapted[name] = tensor
        return adapted

    def forward(self, x: torch.Tensor) -> List[torch.Tensor]:
        x = self.stem(x)
        c1 = self.layer1(x)
        c2 = self.layer2(c1)
        c3 = self.layer3(c2)
        c4 = self.layer4(c3)
        return [c1, c2, c3, self.aspp(c4)]


def build_backbone(config: ModelConfig):
    """Returns (encoder, decoder) for the configured backbone"""
    if config.backbone == Backbone.DEEPLABV3PLUS:
        encoder = DeepLabV3PlusEncoder(aspp_channels=config.encoder_channels[-1])
        # stride-8 skip keeps the attended map small enough for N×N attention at 512 px
        decoder = SkipDecoder(encoder.out_channels[-1], encoder.out_channels[1],
                              config.decoder_channels, skip_index=1)
        return encoder, decoder

    encoder = DeskEncoder(config.encoder_channels)
    decoder = SkipDecoder(encoder.out_channels[-1], encoder.out_channels[1],
                          config.decoder_channels, skip_index=1)
    return encoder, decoder
