"""
Binary cross-entropy for both heads and the weighted joint loss
L = λ·L_S + (1 − λ)·L_C.
"""

from typing import Optional

import torch

from config import Config
from models.loss_breakdown import LossBreakdown
from utils.validation import validate_probability, validate_same_shape

EPSILON = Config.BCE_EPSILON


def bce(prob: torch.Tensor, target: torch.Tensor, eps: float = EPSILON) -> torch.Tensor:
    """
    −mean(y·log p + (1−y)·log(1−p)), probabilities clamped to [ε, 1−ε].

    Raises:
        ShapeError: prob and target shapes differ
    """
    validate_same_shape(prob.shape, target.shape, "bce")
    target = target.to(prob.dtype)
    p = prob.clamp(eps, 1.0 - eps)
    return -(target * torch.log(p) + (1.0 - target) * torch.log1p(-p)).mean()


def joint_loss(seg_prob: torch.Tensor, mask: torch.Tensor, class_prob: Optional[torch.Tensor],
               label: Optional[torch.Tensor], lambda_: float) -> LossBreakdown:
    """
    Segmentation BCE is averaged over pixels (then batch), classification BCE over the batch.
    Without a classification branch (class_prob None) L_C is zero.

    Raises:
        ValidationError: lambda outside [0, 1]
    """
    lambda_ = validate_probability(lambda_, "lambda")
    seg_loss = bce(seg_prob, mask)
    if class_prob is None:
        class_loss = torch.zeros((), dtype=seg_loss.dtype, device=seg_loss.device)
    else:
        class_loss = bce(class_prob, label)
    total = lambda_ * seg_loss + (1.0 - lambda_) * class_loss
    return LossBreakdown(seg_loss, class_loss, total, lambda_)
