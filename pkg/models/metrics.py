from typing import Dict, Optional


class ConfusionCounts:
    """Pixel-level confusion counts, fire = positive"""

    def __init__(self, tp: int = 0, fp: int = 0, tn: int = 0, fn: int = 0):
        self.tp = int(tp)
        self.fp = int(fp)
        self.tn = int(tn)
        self.fn = int(fn)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp,
                               self.tn + other.tn, self.fn + other.fn)

    def __eq__(self, other) -> bool:
        return isinstance(other, ConfusionCounts) and self.to_dict() == other.to_dict()

    def pixel_accuracy(self) -> float:
        return (self.tp + self.tn) / self.total if self.total else 1.0

    def iou_fire(self) -> float:
        union = self.tp + self.fp + self.fn
        # empty union: neither mask has fire, count as agreement
        return self.tp / union if union else 1.0

    def iou_background(self) -> float:
        union = self.tn + self.fp + self.fn
        return self.tn / union if union else 1.0

    def to_dict(self) -> Dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


class MetricReport:
    """Aggregated Table-I style metrics"""

    FIELDS = ("pixel_accuracy", "iou_fire", "iou_background", "mean_iou",
              "class_accuracy", "avg_consistency")

    def __init__(self, pixel_accuracy: float, iou_fire: float, iou_background: float,
                 class_accuracy: Optional[float], avg_consistency: float, n_images: int = 0):
        self.pixel_accuracy = pixel_accuracy
        self.iou_fire = iou_fire
        self.iou_background = iou_background
        self.mean_iou = (iou_fire + iou_background) / 2
        self.class_accuracy = class_accuracy
        self.avg_consistency = avg_consistency
        self.n_images = n_images

    def to_dict(self) -> Dict:
        data = {name: getattr(self, name) for name in self.FIELDS}
        data["n_images"] = self.n_images
        return data

    @classmethod
    def from_dict(cls, data: Dict):
        return cls(data["pixel_accuracy"], data["iou_fire"], data["iou_background"],
                   data.get("class_accuracy"), data["avg_consistency"], data.get("n_images", 0))
