"""
Segmentation metrics: pixel accuracy (per image, averaged), per-class IoU from global
confusion counts, classification accuracy and segmentation/label consistency.
"""

import logging
from typing import List, Optional, Tuple

import numpy as np

from config import Config
from models.metrics import ConfusionCounts, MetricReport
from models.outputs import SegClassOutput
from models.sample import SampleRecord
from utils.error_handlers import ShapeError
from utils.validation import validate_same_shape, validate_threshold

logger = logging.getLogger('attnseg.metrics')


def binarize(seg_prob: np.ndarray, threshold: float = Config.MASK_THRESHOLD) -> np.ndarray:
    """M = 1(prob >= threshold)"""
    validate_threshold(threshold)
    return (np.asarray(seg_prob) >= threshold).astype(np.uint8)


def confusion_counts(pred: np.ndarray, gt: np.ndarray) -> ConfusionCounts:
    validate_same_shape(np.shape(pred), np.shape(gt), "confusion_counts")
    pred = np.asarray(pred).astype(bool)
    gt = np.asarray(gt).astype(bool)
    tp = int(np.count_nonzero(pred & gt))
    fp = int(np.count_nonzero(pred & ~gt))
    fn = int(np.count_nonzero(~pred & gt))
    tn = int(pred.size) - tp - fp - fn
    return ConfusionCounts(tp, fp, tn, fn)


def iou_pair(pred: np.ndarray, gt: np.ndarray) -> Tuple[float, float]:
    """(fire IoU, background IoU); a class with an empty union scores 1"""
    counts = confusion_counts(pred, gt)
    return counts.iou_fire(), counts.iou_background()


def consistency(pred_mask: np.ndarray, label: int) -> int:
    """1 when the label inferred from the mask, 1(Σ M > 0), equals the image label"""
    inferred = int(np.count_nonzero(pred_mask) > 0)
    return int(inferred == int(label))


class MetricAccumulator:
    """Streaming accumulation of the metrics over images"""

    def __init__(self, class_threshold: float = Config.CLASS_THRESHOLD):
        self.class_threshold = class_threshold
        self.reset()

    def reset(self):
        self.counts = ConfusionCounts()
        self.pixel_accuracies: List[float] = []
        self.consistent = 0
        self.class_correct = 0
        self.class_seen = 0
        self.n_images = 0

    def add(self, pred_mask: np.ndarray, gt_mask: np.ndarray, label: int,
            class_prob: Optional[float] = None):
        counts = confusion_counts(pred_mask, gt_mask)
        self.counts = self.counts + counts
        self.pixel_accuracies.append(counts.pixel_accuracy())
        self.consistent += consistency(pred_mask, label)
        if class_prob is not None:
            predicted = int(class_prob >= self.class_threshold)
            self.class_correct += int(predicted == int(label))
            self.class_seen += 1
        self.n_images += 1

    def report(self) -> MetricReport:
        if self.n_images == 0:
            raise ShapeError("no images accumulated")
        # sequential sums keep results reproducible against per-pixel evaluators
        pixel_accuracy = sum(self.pixel_accuracies) / self.n_images
        class_accuracy = (self.class_correct / self.class_seen) if self.class_seen else None
        return MetricReport(
            pixel_accuracy=pixel_accuracy,
            iou_fire=self.counts.iou_fire(),
            iou_background=self.counts.iou_background(),
            class_accuracy=class_accuracy,
            avg_consistency=self.consistent / self.n_images,
            n_images=self.n_images,
        )


def evaluate_corpus(outputs: List[SegClassOutput], records: List[SampleRecord],
                    threshold: float = Config.MASK_THRESHOLD) -> MetricReport:
    """
    Raises:
        ShapeError: the two lists differ in length, or a prediction's size differs from its mask
    """
    if len(outputs) != len(records):
        raise ShapeError(f"{len(outputs)} outputs for {len(records)} records",
                         len(records), len(outputs))
    validate_threshold(threshold)

    accumulator = MetricAccumulator()
    for output, record in zip(outputs, records):
        gt = record.mask if record.mask is not None else np.zeros(record.image.shape[:2], np.uint8)
        accumulator.add(binarize(output.seg_prob, threshold), gt, record.label, output.class_prob)
    report = accumulator.report()
    logger.debug(f"📊 Evaluated {report.n_images} images: mIoU {report.mean_iou:.4f}, "
                 f"consistency {report.avg_consistency:.4f}")
    return report
