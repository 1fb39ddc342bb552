"""
Joint training: decoupled-decay ADAM, weighted BCE loss, per-epoch validation,
model selection on the total validation loss, JSON-lines history and checkpoints.
"""

import copy
import json
import math
import os
import random
import logging
from typing import Callable, List, Optional, Tuple

import numpy as np
import torch
from torch.utils.data import DataLoader

from models.loss_breakdown import LossBreakdown
from models.metrics import MetricReport
from models.outputs import SegClassOutput
from models.sample import DatasetManifest, SampleRecord, Split
from models.train_config import EpochRecord, Schedule, TrainConfig
from network.checkpoint import save_checkpoint
from network.segclass_net import SegClassNet, images_to_tensor, outputs_from_tensors
from services.dataset_service import SampleDataset
from services.loss_service import joint_loss
from services.metrics_service import MetricAccumulator, binarize
from services.report_service import render_epoch
from utils.error_handlers import DatasetError, DivergenceError
from utils.io_utils import atomic_write_text

logger = logging.getLogger('attnseg.train')

HISTORY_FILE = "history.jsonl"
BEST_CHECKPOINT = "best.ckpt"
LAST_CHECKPOINT = "last.ckpt"

OutputTransform = Callable[[SegClassOutput], SegClassOutput]


def set_determinism(seed: int, deterministic: bool = True):
    """Seed every generator; in deterministic mode also pin torch to deterministic kernels"""
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)
    if deterministic:
        os.environ.setdefault("CUBLAS_WORKSPACE_CONFIG", ":4096:8")
        torch.use_deterministic_algorithms(True, warn_only=True)
        torch.backends.cudnn.benchmark = False
        torch.backends.cudnn.deterministic = True


def build_optimizer(model: torch.nn.Module, config: TrainConfig) -> torch.optim.Optimizer:
    # decoupled weight decay
    return torch.optim.AdamW(model.parameters(), lr=config.lr, weight_decay=config.weight_decay)


def build_scheduler(optimizer: torch.optim.Optimizer, config: TrainConfig,
                    lr_lambda: Optional[Callable[[int], float]] = None):
    """Constant rate unless a step schedule or an epoch→factor callable is given"""
    if lr_lambda is not None:
        return torch.optim.lr_scheduler.LambdaLR(optimizer, lr_lambda)
    if config.schedule == Schedule.STEP:
        return torch.optim.lr_scheduler.StepLR(optimizer, step_size=config.schedule_step_size,
                                               gamma=0.5)
    return None


def make_loader(records: List[SampleRecord], config: TrainConfig, shuffle: bool,
                augment: bool = False) -> Tuple[SampleDataset, DataLoader]:
    dataset = SampleDataset(records, config.input_size,
                            horizontal_flip=augment and config.horizontal_flip, seed=config.seed)
    generator = torch.Generator()
    generator.manual_seed(config.seed)
    loader = DataLoader(dataset, batch_size=config.batch_size, shuffle=shuffle,
                        generator=generator, num_workers=config.num_workers)
    return dataset, loader


def _batch_loss(model: SegClassNet, batch, lambda_: float, device: torch.device):
    result = model(batch["image"].to(device))
    seg_prob = torch.sigmoid(result["seg_logits"])
    class_logit = result["class_logit"]
    class_prob = torch.sigmoid(class_logit) if class_logit is not None else None
    breakdown = joint_loss(seg_prob, batch["mask"].to(device), class_prob,
                           batch["label"].to(device), lambda_)
    return result, breakdown


@torch.no_grad()
def evaluate_records(model: SegClassNet, records: List[SampleRecord], config: TrainConfig,
                     transform: Optional[OutputTransform] = None,
                     device: Optional[torch.device] = None) -> Tuple[LossBreakdown, MetricReport]:
    """Loss breakdown and metrics of a model on a list of records, in eval mode"""
    device = device or next(model.parameters()).device
    was_training = model.training
    model.eval()
    _, loader = make_loader(records, config, shuffle=False)
    accumulator = MetricAccumulator()
    breakdowns, sizes = [], []
    try:
        for batch in loader:
            result, breakdown = _batch_loss(model, batch, config.lambda_, device)
            breakdowns.append(breakdown)
            sizes.append(batch["image"].shape[0])
            masks = batch["mask"][:, 0].numpy().astype(np.uint8)
            labels = batch["label"].numpy().astype(int)
            for output, gt, label in zip(outputs_from_tensors(result), masks, labels):
                if transform is not None:
                    output = transform(output)
                accumulator.add(binarize(output.seg_prob, config.mask_threshold), gt, label,
                                output.class_prob)
    finally:
        model.train(was_training)
    return LossBreakdown.mean_of(breakdowns, sizes), accumulator.report()


class TrainResult:
    def __init__(self, model: SegClassNet, history: List[EpochRecord], best_epoch: int,
                 best_val_loss: float, checkpoint_path: Optional[str] = None):
        self.model = model
        self.history = history
        self.best_epoch = best_epoch
        self.best_val_loss = best_val_loss
        self.checkpoint_path = checkpoint_path


def _write_history(path: str, history: List[EpochRecord]):
    lines = [json.dumps(record.to_dict(), sort_keys=True) for record in history]
    atomic_write_text(path, "\n".join(lines) + "\n")


def train(model: SegClassNet, manifest: DatasetManifest, config: TrainConfig,
          lr_lambda: Optional[Callable[[int], float]] = None,
          device: str = "cpu") -> TrainResult:
    """
    Optimize the joint model; the returned model carries the weights of the epoch with
    the lowest total validation loss.

    Raises:
        DatasetError: empty train or val split
        DivergenceError: non-finite loss, with epoch and batch index
    """
    config.validate()
    train_records = manifest.records_for(Split.TRAIN)
    val_records = manifest.records_for(Split.VAL)
    if not train_records or not val_records:
        raise DatasetError(f"train and val splits must be non-empty, got {manifest.split_counts()}")

    set_determinism(config.seed, config.deterministic)
    device = torch.device(device)
    model.to(device)

    train_dataset, train_loader = make_loader(train_records, config, shuffle=True, augment=True)
    optimizer = build_optimizer(model, config)
    scheduler = build_scheduler(optimizer, config, lr_lambda)

    checkpoint_dir = config.checkpoint_dir
    if checkpoint_dir:
        os.makedirs(checkpoint_dir, exist_ok=True)

    logger.info(f"🏋️ Training on {len(train_records)} images, validating on {len(val_records)} "
                f"(epochs {config.epochs}, batch {config.batch_size}, lr {config.lr}, "
                f"λ {config.lambda_}, seed {config.seed})")

    history: List[EpochRecord] = []
    best_val = math.inf
    best_epoch = 0
    best_state = None

    for epoch in range(1, config.epochs + 1):
        model.train()
        train_dataset.set_epoch(epoch)
        current_lr = optimizer.param_groups[0]["lr"]
        breakdowns, sizes = [], []

        for batch_index, batch in enumerate(train_loader):
            _, breakdown = _batch_loss(model, batch, config.lambda_, device)
            if not torch.isfinite(breakdown.total):
                raise DivergenceError(epoch, batch_index, float(breakdown.total.detach()))
            optimizer.zero_grad(set_to_none=True)
            breakdown.total.backward()
            optimizer.step()
            breakdowns.append(LossBreakdown(breakdown.seg_loss.detach(), breakdown.class_loss.detach(),
                                            breakdown.total.detach(), breakdown.lambda_))
            sizes.append(batch["image"].shape[0])

        train_loss = LossBreakdown.mean_of(breakdowns, sizes)
        val_loss, val_report = evaluate_records(model, val_records, config, device=device)
        record = EpochRecord(epoch, current_lr, train_loss.to_dict(), val_loss.to_dict(),
                             val_report.to_dict())
        history.append(record)
        logger.info("\n" + render_epoch(epoch, record.train_loss, record.val_loss, val_report))

        if record.val_total < best_val:
            best_val = record.val_total
            best_epoch = epoch
            best_state = copy.deepcopy(model.state_dict())
            if checkpoint_dir:
                save_checkpoint(model, os.path.join(checkpoint_dir, BEST_CHECKPOINT),
                                extra={"epoch": epoch, "val_total": best_val})
                logger.info(f"⭐ New best validation loss {best_val:.5f} at epoch {epoch}")

        if checkpoint_dir:
            save_checkpoint(model, os.path.join(checkpoint_dir, LAST_CHECKPOINT),
                            extra={"epoch": epoch, "val_total": record.val_total})
            _write_history(os.path.join(checkpoint_dir, HISTORY_FILE), history)

        if scheduler is not None:
            scheduler.step()

    if best_state is not None:
        model.load_state_dict(best_state)
    model.eval()
    logger.info(f"✅ Training done: best epoch {best_epoch}, val loss {best_val:.5f}")

    checkpoint_path = os.path.join(checkpoint_dir, BEST_CHECKPOINT) if checkpoint_dir else None
    return TrainResult(model, history, best_epoch, best_val, checkpoint_path)


@torch.no_grad()
def predict(model: SegClassNet, images: List[np.ndarray], batch_size: int = 16) -> List[SegClassOutput]:
    """
    Forward pass per image, in input order, without touching parameters.

    Raises:
        ShapeError: an image does not match the model input size
    """
    was_training = model.training
    model.eval()
    device = next(model.parameters()).device
    outputs: List[SegClassOutput] = []
    try:
        for start in range(0, len(images), batch_size):
            chunk = images_to_tensor(images[start:start + batch_size], model.config.input_size)
            outputs.extend(outputs_from_tensors(model(chunk.to(device))))
    finally:
        model.train(was_training)
    return outputs
