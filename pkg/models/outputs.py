from typing import Dict, Optional

import numpy as np


def _sigmoid(x):
    return np.exp(-np.logaddexp(0.0, -np.asarray(x, dtype=np.float64)))


class SegClassOutput:
    """Per-image network output: segmentation map and image-level fire probability"""

    def __init__(self, seg_logits: np.ndarray, class_logit: Optional[float] = None,
                 alpha: float = 0.0, seg_prob: np.ndarray = None, class_prob: Optional[float] = None):
        self.seg_logits = seg_logits
        self.seg_prob = seg_prob if seg_prob is not None else _sigmoid(seg_logits)
        self.class_logit = class_logit
        if class_prob is None and class_logit is not None:
            class_prob = float(_sigmoid(class_logit))
        self.class_prob = class_prob
        self.alpha = alpha

    @property
    def has_classification(self) -> bool:
        return self.class_prob is not None

    def with_seg_prob(self, seg_prob: np.ndarray) -> "SegClassOutput":
        """Copy with a replaced probability map; logits and class fields kept"""
        return SegClassOutput(self.seg_logits, self.class_logit, self.alpha,
                              seg_prob=seg_prob, class_prob=self.class_prob)

    def to_dict(self) -> Dict:
        return {
            "class_logit": self.class_logit,
            "class_prob": self.class_prob,
            "alpha": self.alpha,
            "height": int(self.seg_prob.shape[0]),
            "width": int(self.seg_prob.shape[1]),
        }
