import os
import logging

from config import get_config
from models.sample import Split
from models.train_config import TrainConfig
from network.checkpoint import load_checkpoint
from services.ablation_service import apply_naive_rule
from services.dataset_service import load_manifest
from services.report_service import render_reports
from services.training_service import evaluate_records
from utils.error_handlers import UsageError, cli_error_handler
from utils.io_utils import atomic_write_text, write_json
from utils.validation import validate_threshold
from commands.common import (
    common_parser, finish_run, load_settings_file, require, require_out, resolve, resolve_seed, start_run
)

logger = logging.getLogger('attnseg.cli.eval')

SPLIT_NAMES = [s.value for s in Split]


def register(subparsers):
    parser = subparsers.add_parser("eval", parents=[common_parser()],
                                   help="evaluate a checkpoint on a dataset split")
    parser.add_argument("--ckpt", default=None, help="checkpoint file (required unless --config supplies it)")
    parser.add_argument("--data", default=None, help="dataset directory (required unless --config supplies it)")
    parser.add_argument("--split", default=None, help=f"one of {', '.join(SPLIT_NAMES)}")
    parser.add_argument("--threshold", type=float, default=None, help="mask binarization threshold")
    parser.add_argument("--apply-naive", action="store_true", default=None,
                        help="zero masks of images classified non-fire")
    parser.add_argument("--batch-size", type=int, default=None)
    parser.set_defaults(func=run)
    return parser


@cli_error_handler
def run(args):
    settings = load_settings_file(args.config)
    ckpt = require(args, settings, "ckpt", "--ckpt")
    data = require(args, settings, "data", "--data")
    preset = get_config()
    seed = resolve_seed(args, settings)

    split_name = resolve(args, settings, "split", Split.TEST.value)
    if split_name not in SPLIT_NAMES:
        raise UsageError(f"Unknown split '{split_name}', expected one of {', '.join(SPLIT_NAMES)}")
    threshold = validate_threshold(resolve(args, settings, "threshold", preset.MASK_THRESHOLD))
    apply_naive = bool(resolve(args, settings, "apply_naive", False))
    out = require_out(args, settings, os.path.join(os.path.dirname(ckpt) or ".", f"eval_{split_name}"))

    model, extra = load_checkpoint(ckpt)
    manifest = load_manifest(data, seed=None)
    records = manifest.records_for(Split(split_name))
    if not records:
        raise UsageError(f"Split '{split_name}' of {data} is empty")

    eval_config = TrainConfig.from_config(
        preset,
        input_size=model.config.input_size,
        batch_size=resolve(args, settings, "batch_size", None),
        seed=seed,
        checkpoint_dir=None,
        mask_threshold=threshold,
    ).validate()

    snapshot = {
        "ckpt": ckpt,
        "data": data,
        "out": out,
        "split": split_name,
        "threshold": threshold,
        "apply_naive": apply_naive,
        "batch_size": eval_config.batch_size,
        "model": model.config.to_dict(),
        "split_digest": manifest.split_digest(),
    }
    run_manifest = start_run("eval", snapshot, seed)

    loss, report = evaluate_records(model, records, eval_config,
                                    transform=apply_naive_rule if apply_naive else None)

    name = os.path.basename(ckpt) + (" + naive rule" if apply_naive else "")
    table = render_reports([(name, report)], title=f"Split '{split_name}' ({report.n_images} images)")
    write_json(os.path.join(out, "report.json"), {
        "checkpoint": ckpt,
        "split": split_name,
        "threshold": threshold,
        "apply_naive": apply_naive,
        "loss": loss.to_dict(),
        "metrics": report.to_dict(),
        "checkpoint_extra": extra,
    })
    atomic_write_text(os.path.join(out, "report.txt"), table)
    finish_run(run_manifest, out, 0)

    logger.info("\n" + table)
    return 0
