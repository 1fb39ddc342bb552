import hashlib
from enum import Enum
from typing import Dict, List, Optional

import numpy as np

from utils.error_handlers import DatasetError
from utils.validation import validate_positive_int, validate_probability, validate_range


class Split(Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


class BlobKind(Enum):
    FIRE = "fire"
    DISTRACTOR = "distractor"


class Blob:
    """Elliptical blob painted by the synthetic generator"""

    def __init__(self, cx: int, cy: int, semi_major: float, semi_minor: float,
                 angle: float, color: List[float], kind: BlobKind = BlobKind.FIRE):
        self.cx = cx
        self.cy = cy
        self.semi_major = semi_major
        self.semi_minor = semi_minor
        self.angle = angle
        self.color = color
        self.kind = kind

    def support(self, size: int) -> np.ndarray:
        """Boolean size×size map of the pixels inside the ellipse"""
        yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
        dx = xx - self.cx
        dy = yy - self.cy
        cos_t, sin_t = np.cos(self.angle), np.sin(self.angle)
        u = (dx * cos_t + dy * sin_t) / self.semi_major
        v = (-dx * sin_t + dy * cos_t) / self.semi_minor
        return (u * u + v * v) <= 1.0

    def to_dict(self) -> Dict:
        return {
            "cx": self.cx,
            "cy": self.cy,
            "semi_major": self.semi_major,
            "semi_minor": self.semi_minor,
            "angle": self.angle,
            "color": list(self.color),
            "kind": self.kind.value,
        }

    @classmethod
    def from_dict(cls, data: Dict):
        return cls(data["cx"], data["cy"], data["semi_major"], data["semi_minor"],
                   data["angle"], data["color"], BlobKind(data.get("kind", "fire")))


class SampleRecord:
    """One image, its binary fire mask (optional) and its image-level label"""

    def __init__(self, id: str, image: np.ndarray, mask: Optional[np.ndarray] = None,
                 label: int = 0, image_path: str = None, mask_path: str = None,
                 blobs: List[Blob] = None):
        self.id = id
        self.image = image
        self.mask = mask
        self.label = int(label)
        self.image_path = image_path
        self.mask_path = mask_path
        self.blobs = blobs or []

    @property
    def height(self) -> int:
        return self.image.shape[0]

    @property
    def width(self) -> int:
        return self.image.shape[1]

    @property
    def has_mask(self) -> bool:
        return self.mask is not None

    def validate(self) -> "SampleRecord":
        """Check the record invariants, raising DatasetError naming the id"""
        image = self.image
        if image is None or image.ndim != 3 or image.shape[2] != 3:
            shape = None if image is None else image.shape
            raise DatasetError(f"{self.id}: image must be H×W×3, got {shape}", record_id=self.id)
        if image.size and (image.min() < 0.0 or image.max() > 1.0):
            raise DatasetError(f"{self.id}: image values must lie in [0, 1]", record_id=self.id)
        if self.label not in (0, 1):
            raise DatasetError(f"{self.id}: label must be 0 or 1, got {self.label}", record_id=self.id)

        if self.mask is not None:
            if self.mask.shape != image.shape[:2]:
                raise DatasetError(
                    f"{self.id}: size mismatch, image {image.shape[:2]} vs mask {self.mask.shape}",
                    record_id=self.id
                )
            if not np.isin(self.mask, (0, 1)).all():
                raise DatasetError(f"{self.id}: mask must be binary", record_id=self.id)
            inferred = int(self.mask.any())
            if inferred != self.label:
                raise DatasetError(
                    f"{self.id}: label/mask inconsistency (label {self.label}, "
                    f"mask has {int(self.mask.sum())} fire pixels)",
                    record_id=self.id
                )
        return self

    def to_dict(self) -> Dict:
        return {
            "id": self.id,
            "label": self.label,
            "image_path": self.image_path,
            "mask_path": self.mask_path,
            "height": self.height,
            "width": self.width,
            "blobs": [b.to_dict() for b in self.blobs],
        }


class DatasetManifest:
    """Records plus their train/val/test assignment"""

    def __init__(self, records: List[SampleRecord], split_assignment: Dict[str, Split] = None,
                 seed: int = 0):
        self.records = records
        self.split_assignment = split_assignment or {}
        self.seed = seed
        self._by_id = {r.id: r for r in records}
        if len(self._by_id) != len(records):
            raise DatasetError("Record ids must be unique")

    def __len__(self) -> int:
        return len(self.records)

    @property
    def ids(self) -> List[str]:
        return [r.id for r in self.records]

    @property
    def is_split(self) -> bool:
        return bool(self.split_assignment)

    def record(self, record_id: str) -> SampleRecord:
        return self._by_id[record_id]

    def records_for(self, split: Split) -> List[SampleRecord]:
        return [r for r in self.records if self.split_assignment.get(r.id) == split]

    def split_counts(self) -> Dict[str, int]:
        counts = {s.value: 0 for s in Split}
        for split in self.split_assignment.values():
            counts[split.value] += 1
        return counts

    def split_digest(self) -> str:
        """sha256 over sorted id:split pairs"""
        payload = "\n".join(f"{rid}:{self.split_assignment[rid].value}"
                            for rid in sorted(self.split_assignment))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def to_dict(self) -> Dict:
        return {
            "records": [r.to_dict() for r in self.records],
            "split_assignment": {rid: s.value for rid, s in sorted(self.split_assignment.items())},
            "seed": self.seed,
        }


class SynthConfig:
    """Parameters of the synthetic desk-scale corpus"""

    def __init__(self, n_images: int = 200, image_size: int = 64, fire_fraction: float = 0.5,
                 distractor_fraction: float = 0.5, min_blob_area: int = 20,
                 max_blob_area: int = 300, seed: int = 0):
        self.n_images = n_images
        self.image_size = image_size
        self.fire_fraction = fire_fraction
        self.distractor_fraction = distractor_fraction
        self.min_blob_area = min_blob_area
        self.max_blob_area = max_blob_area
        self.seed = seed

    def validate(self) -> "SynthConfig":
        validate_positive_int(self.n_images, "n_images", minimum=5)
        validate_positive_int(self.image_size, "image_size", minimum=8)
        validate_probability(self.fire_fraction, "fire_fraction")
        validate_probability(self.distractor_fraction, "distractor_fraction")
        validate_positive_int(self.min_blob_area, "min_blob_area")
        validate_range(self.max_blob_area, "max_blob_area", low=self.min_blob_area,
                       high=self.image_size ** 2, high_inclusive=False)
        return self

    def to_dict(self) -> Dict:
        return {
            "n_images": self.n_images,
            "image_size": self.image_size,
            "fire_fraction": self.fire_fraction,
            "distractor_fraction": self.distractor_fraction,
            "min_blob_area": self.min_blob_area,
            "max_blob_area": self.max_blob_area,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Dict):
        return cls(**{k: data[k] for k in cls().to_dict() if k in data})
