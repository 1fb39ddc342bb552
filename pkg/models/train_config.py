from enum import Enum
from typing import Dict, Optional

from utils.validation import (
    validate_choice, validate_positive_int, validate_probability, validate_range
)


class Schedule(Enum):
    CONSTANT = "constant"
    STEP = "step"


class TrainConfig:
    """Optimizer settings, loss weight, schedule, seed and checkpoint policy"""

    def __init__(self, lr: float = 5e-4, weight_decay: float = 1e-5, lambda_: float = 0.6,
                 epochs: int = 60, batch_size: int = 8, seed: int = 0, optimizer: str = "adam",
                 input_size: int = 64, checkpoint_dir: Optional[str] = "checkpoints",
                 schedule: Schedule = Schedule.CONSTANT, schedule_step_size: int = 20,
                 horizontal_flip: bool = False, num_workers: int = 0,
                 deterministic: bool = True, mask_threshold: float = 0.5):
        self.lr = lr
        self.weight_decay = weight_decay
        self.lambda_ = lambda_
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed
        self.optimizer = optimizer
        self.input_size = input_size
        self.checkpoint_dir = checkpoint_dir
        self.schedule = Schedule(schedule)
        self.schedule_step_size = schedule_step_size
        self.horizontal_flip = horizontal_flip
        self.num_workers = num_workers
        self.deterministic = deterministic
        self.mask_threshold = mask_threshold

    def validate(self) -> "TrainConfig":
        validate_range(self.lr, "lr", low=0.0, low_inclusive=False)
        validate_range(self.weight_decay, "weight_decay", low=0.0)
        validate_probability(self.lambda_, "lambda")
        validate_positive_int(self.epochs, "epochs")
        validate_positive_int(self.batch_size, "batch_size")
        validate_positive_int(self.input_size, "input_size", minimum=8)
        validate_positive_int(self.schedule_step_size, "schedule_step_size")
        validate_positive_int(self.num_workers, "num_workers", minimum=0)
        validate_choice(self.optimizer, "optimizer", ["adam"])
        validate_range(self.mask_threshold, "mask_threshold", 0.0, 1.0,
                       low_inclusive=False, high_inclusive=False)
        return self

    def copy(self, **overrides) -> "TrainConfig":
        data = self.to_dict()
        data.update(overrides)
        return TrainConfig.from_dict(data)

    def to_dict(self) -> Dict:
        return {
            "lr": self.lr,
            "weight_decay": self.weight_decay,
            "lambda": self.lambda_,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "seed": self.seed,
            "optimizer": self.optimizer,
            "input_size": self.input_size,
            "checkpoint_dir": self.checkpoint_dir,
            "schedule": self.schedule.value,
            "schedule_step_size": self.schedule_step_size,
            "horizontal_flip": self.horizontal_flip,
            "num_workers": self.num_workers,
            "deterministic": self.deterministic,
            "mask_threshold": self.mask_threshold,
        }

    @classmethod
    def from_dict(cls, data: Dict):
        data = dict(data)
        if "lambda" in data:
            data.setdefault("lambda_", data.pop("lambda"))
        known = cls().__dict__.keys()
        return cls(**{k: v for k, v in data.items() if k in known})

    @classmethod
    def from_config(cls, config_class, **overrides):
        """Defaults from a config preset, then explicit overrides"""
        data = {
            "lr": config_class.LEARNING_RATE,
            "weight_decay": config_class.WEIGHT_DECAY,
            "lambda_": config_class.LOSS_LAMBDA,
            "epochs": config_class.EPOCHS,
            "batch_size": config_class.BATCH_SIZE,
            "seed": config_class.SEED,
            "optimizer": config_class.OPTIMIZER,
            "input_size": config_class.INPUT_SIZE,
            "checkpoint_dir": config_class.CHECKPOINT_DIR,
            "schedule": config_class.SCHEDULE,
            "schedule_step_size": config_class.SCHEDULE_STEP_SIZE,
            "horizontal_flip": config_class.HORIZONTAL_FLIP,
            "num_workers": config_class.NUM_WORKERS,
            "mask_threshold": config_class.MASK_THRESHOLD,
        }
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)


class EpochRecord:
    """One line of the training history"""

    def __init__(self, epoch: int, lr: float, train_loss: Dict, val_loss: Dict, val_metrics: Dict):
        self.epoch = epoch
        self.lr = lr
        self.train_loss = train_loss
        self.val_loss = val_loss
        self.val_metrics = val_metrics

    @property
    def val_total(self) -> float:
        return self.val_loss["total"]

    def to_dict(self) -> Dict:
        return {
            "epoch": self.epoch,
            "lr": self.lr,
            "train_loss": self.train_loss,
            "val_loss": self.val_loss,
            "val_metrics": self.val_metrics,
        }

    @classmethod
    def from_dict(cls, data: Dict):
        return cls(data["epoch"], data["lr"], data["train_loss"], data["val_loss"], data["val_metrics"])
