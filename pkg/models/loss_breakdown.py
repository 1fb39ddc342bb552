from typing import Dict, Union

import torch

Number = Union[float, torch.Tensor]


def _as_float(value: Number) -> float:
    return float(value.detach().item()) if isinstance(value, torch.Tensor) else float(value)


class LossBreakdown:
    """Segmentation loss, classification loss and their weighted total"""

    def __init__(self, seg_loss: Number, class_loss: Number, total: Number, lambda_: float):
        self.seg_loss = seg_loss
        self.class_loss = class_loss
        self.total = total
        self.lambda_ = lambda_

    def to_dict(self) -> Dict:
        return {
            "seg_loss": _as_float(self.seg_loss),
            "class_loss": _as_float(self.class_loss),
            "total": _as_float(self.total),
            "lambda": self.lambda_,
        }

    @classmethod
    def mean_of(cls, items, weights=None) -> "LossBreakdown":
        """Weighted average of detached breakdowns (weights default to 1)"""
        items = list(items)
        weights = list(weights) if weights is not None else [1.0] * len(items)
        norm = float(sum(weights))
        seg = sum(w * _as_float(i.seg_loss) for i, w in zip(items, weights)) / norm
        cls_ = sum(w * _as_float(i.class_loss) for i, w in zip(items, weights)) / norm
        lambda_ = items[0].lambda_
        return cls(seg, cls_, lambda_ * seg + (1 - lambda_) * cls_, lambda_)
