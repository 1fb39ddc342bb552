import logging

from config import get_config
from models.model_config import Backbone, InitMode, ModelConfig
from models.train_config import Schedule, TrainConfig
from models.variant import VariantName, VariantSpec
from network.segclass_net import build_model
from services.dataset_service import load_manifest
from services.training_service import train
from utils.error_handlers import cli_error_handler
from commands.common import (
    common_parser, finish_run, load_settings_file, require, require_out, resolve, resolve_seed, start_run
)

logger = logging.getLogger('attnseg.cli.train')

VARIANT_CHOICES = [v.value for v in VariantName if v != VariantName.NAIVE_MASK]


def add_model_flags(parser):
    parser.add_argument("--preset", choices=["desk", "real"], default=None)
    parser.add_argument("--backbone", choices=[b.value for b in Backbone], default=None)
    parser.add_argument("--input-size", type=int, default=None)
    parser.add_argument("--init", choices=[m.value for m in InitMode], default=None)
    parser.add_argument("--weights", default=None, help="encoder weight file for pretrained-encoder init")


def add_train_flags(parser):
    parser.add_argument("--epochs", type=int, default=None)
    parser.add_argument("--batch-size", type=int, default=None)
    parser.add_argument("--lr", type=float, default=None)
    parser.add_argument("--weight-decay", type=float, default=None)
    parser.add_argument("--lambda", dest="lambda", type=float, default=None,
                        help="segmentation loss weight in [0, 1]")
    parser.add_argument("--schedule", choices=[s.value for s in Schedule], default=None)
    parser.add_argument("--schedule-step", dest="schedule_step_size", type=int, default=None)
    parser.add_argument("--hflip", dest="horizontal_flip", action="store_true", default=None)
    parser.add_argument("--num-workers", type=int, default=None)


def register(subparsers):
    parser = subparsers.add_parser("train", parents=[common_parser()], help="train one variant")
    parser.add_argument("--data", default=None, help="dataset directory (required unless --config supplies it)")
    parser.add_argument("--variant", choices=VARIANT_CHOICES, default=None)
    add_model_flags(parser)
    add_train_flags(parser)
    parser.set_defaults(func=run)
    return parser


def resolve_preset(args, settings):
    """Preset by name; a deeplabv3plus backbone without a preset implies the real-data preset"""
    name = resolve(args, settings, "preset", None)
    if name is None and resolve(args, settings, "backbone", None) == Backbone.DEEPLABV3PLUS.value:
        name = "real"
    return get_config(name)


def resolve_base_model(args, settings) -> ModelConfig:
    if isinstance(settings.get("model"), dict):
        base = ModelConfig.from_dict(settings["model"])
    else:
        base = ModelConfig.from_config(resolve_preset(args, settings),
                                       backbone=resolve(args, settings, "backbone", None))
    input_size = resolve(args, settings, "input_size", None)
    return base.copy(input_size=input_size) if input_size is not None else base


def resolve_train_config(args, settings, seed: int, input_size: int, out: str) -> TrainConfig:
    preset = resolve_preset(args, settings)
    return TrainConfig.from_config(
        preset,
        lr=resolve(args, settings, "lr", None),
        weight_decay=resolve(args, settings, "weight_decay", None),
        lambda_=resolve(args, settings, "lambda", None),
        epochs=resolve(args, settings, "epochs", None),
        batch_size=resolve(args, settings, "batch_size", None),
        seed=seed,
        input_size=input_size,
        checkpoint_dir=out,
        schedule=resolve(args, settings, "schedule", None),
        schedule_step_size=resolve(args, settings, "schedule_step_size", None),
        horizontal_flip=resolve(args, settings, "horizontal_flip", None),
        num_workers=resolve(args, settings, "num_workers", None),
        deterministic=resolve(args, settings, "deterministic", None),
    ).validate()


@cli_error_handler
def run(args):
    settings = load_settings_file(args.config)
    data = require(args, settings, "data", "--data")
    seed = resolve_seed(args, settings)
    out = require_out(args, settings, get_config().CHECKPOINT_DIR)

    variant = VariantSpec(resolve(args, settings, "variant", VariantName.PROPOSED_FULL.value),
                          resolve_base_model(args, settings))
    model_config = variant.model_config.validate()
    train_config = resolve_train_config(args, settings, seed, model_config.input_size, out)
    if variant.forces_lambda is not None and train_config.lambda_ != variant.forces_lambda:
        logger.warning(f"⚠️ {variant.name.value} trains with lambda {variant.forces_lambda}")
        train_config = train_config.copy(lambda_=variant.forces_lambda)

    init = resolve(args, settings, "init", InitMode.RANDOM.value)
    weights = resolve(args, settings, "weights", None)

    # dataset problems surface before any training step
    manifest = load_manifest(data, seed=None)

    snapshot = {
        "data": data,
        "out": out,
        "variant": variant.name.value,
        "init": init,
        "weights": weights,
        "model": model_config.to_dict(),
        **train_config.to_dict(),
        "split_digest": manifest.split_digest(),
    }
    run_manifest = start_run("train", snapshot, seed)

    model = build_model(model_config, InitMode(init), weights, seed=seed)
    result = train(model, manifest, train_config)

    finish_run(run_manifest, out, 0)
    logger.info(f"✅ Best checkpoint {result.checkpoint_path} (epoch {result.best_epoch})")
    return 0
