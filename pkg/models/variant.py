from enum import Enum
from typing import Dict, List, Optional

from models.metrics import MetricReport
from models.model_config import ModelConfig


class VariantName(Enum):
    SEG_ONLY = "seg_only"
    MULTITASK_PLAIN = "multitask_plain"
    NAIVE_MASK = "naive_mask"
    PROPOSED_FULL = "proposed_full"


# Row labels for reports
VARIANT_TITLES = {
    VariantName.SEG_ONLY: "Single-task segmentation",
    VariantName.MULTITASK_PLAIN: "Multi-task (no attention)",
    VariantName.NAIVE_MASK: "Naive multi-task",
    VariantName.PROPOSED_FULL: "Proposed",
}


class VariantSpec:
    """A comparison variant and the model config it trains"""

    def __init__(self, name: VariantName, base_config: ModelConfig):
        self.name = VariantName(name)
        self.base_config = base_config

    @property
    def model_config(self) -> ModelConfig:
        if self.name == VariantName.PROPOSED_FULL:
            return self.base_config.copy(attention_spatial=True, attention_classgate=True,
                                         classification_branch=True)
        if self.name == VariantName.SEG_ONLY:
            return self.base_config.copy(attention_spatial=False, attention_classgate=False,
                                         classification_branch=False)
        return self.base_config.copy(attention_spatial=False, attention_classgate=False,
                                     classification_branch=True)

    @property
    def forces_lambda(self) -> Optional[float]:
        """seg_only drops the classification loss"""
        return 1.0 if self.name == VariantName.SEG_ONLY else None

    @property
    def trains_as(self) -> VariantName:
        """naive_mask reuses the multitask_plain network and masks at inference"""
        return VariantName.MULTITASK_PLAIN if self.name == VariantName.NAIVE_MASK else self.name

    def to_dict(self) -> Dict:
        return {"name": self.name.value, "model_config": self.model_config.to_dict()}


class AblationRow:
    def __init__(self, variant: VariantName, report: Optional[MetricReport] = None,
                 status: str = "ok", error: Optional[str] = None, split_digest: str = None,
                 seed: int = 0):
        self.variant = variant
        self.report = report
        self.status = status
        self.error = error
        self.split_digest = split_digest
        self.seed = seed

    @property
    def failed(self) -> bool:
        return self.status != "ok"

    def to_dict(self) -> Dict:
        return {
            "variant": self.variant.value,
            "title": VARIANT_TITLES[self.variant],
            "status": self.status,
            "error": self.error,
            "split_digest": self.split_digest,
            "seed": self.seed,
            "metrics": self.report.to_dict() if self.report else None,
        }


class AblationTable:
    def __init__(self, rows: List[AblationRow] = None, seed: int = 0):
        self.rows = rows or []
        self.seed = seed

    def row(self, variant: VariantName) -> AblationRow:
        for row in self.rows:
            if row.variant == VariantName(variant):
                return row
        raise KeyError(variant)

    def to_dict(self) -> Dict:
        return {"seed": self.seed, "rows": [r.to_dict() for r in self.rows]}
