import os
import logging

import numpy as np
from PIL import UnidentifiedImageError

from config import get_config
from network.checkpoint import load_checkpoint
from services.ablation_service import apply_naive_rule
from services.metrics_service import binarize
from services.training_service import predict
from utils.error_handlers import ErrorCollector, PartialFailureError, cli_error_handler
from utils.io_utils import read_image, render_overlay, resize_image, resize_mask, write_image, write_json, write_mask
from utils.validation import validate_threshold
from commands.common import (
    common_parser, finish_run, load_settings_file, require, require_out, resolve, resolve_seed, start_run
)

logger = logging.getLogger('attnseg.cli.predict')


def register(subparsers):
    parser = subparsers.add_parser("predict", parents=[common_parser()],
                                   help="segment and classify image files")
    parser.add_argument("--ckpt", default=None, help="checkpoint file (required unless --config supplies it)")
    parser.add_argument("images", nargs="*", help="image files (required unless --config supplies them)")
    parser.add_argument("--threshold", type=float, default=None, help="mask binarization threshold")
    parser.add_argument("--apply-naive", action="store_true", default=None,
                        help="zero masks of images classified non-fire")
    parser.set_defaults(func=run)
    return parser


def _output_names(paths):
    """Unique file stems, in input order"""
    names, seen = [], {}
    for path in paths:
        stem = os.path.splitext(os.path.basename(path))[0]
        count = seen.get(stem, 0)
        seen[stem] = count + 1
        names.append(stem if count == 0 else f"{stem}_{count}")
    return names


@cli_error_handler
def run(args):
    settings = load_settings_file(args.config)
    ckpt = require(args, settings, "ckpt", "--ckpt")
    images = list(require(args, settings, "images", "images"))
    preset = get_config()
    seed = resolve_seed(args, settings)
    out = require_out(args, settings)
    threshold = validate_threshold(resolve(args, settings, "threshold", preset.MASK_THRESHOLD))
    apply_naive = bool(resolve(args, settings, "apply_naive", False))

    model, _ = load_checkpoint(ckpt)
    size = model.config.input_size

    run_manifest = start_run("predict", {
        "ckpt": ckpt,
        "images": images,
        "out": out,
        "threshold": threshold,
        "apply_naive": apply_naive,
        "model": model.config.to_dict(),
    }, seed)

    collector = ErrorCollector()
    names = _output_names(images)
    loaded = []
    for path, name in zip(images, names):
        try:
            image = read_image(path)
        except (OSError, UnidentifiedImageError, ValueError) as e:
            collector.add_error(e, {"file": path})
            continue
        loaded.append((path, name, image))

    outputs = predict(model, [resize_image(image, (size, size)) for _, _, image in loaded])

    masks_dir = os.path.join(out, "masks")
    overlays_dir = os.path.join(out, "overlays")
    overlay = preset.OVERLAY_SETTINGS
    predictions = []
    for (path, name, image), output in zip(loaded, outputs):
        if apply_naive:
            output = apply_naive_rule(output, preset.CLASS_THRESHOLD)
        mask = resize_mask(binarize(output.seg_prob, threshold), image.shape[:2])
        mask_path = os.path.join(masks_dir, f"{name}.png")
        overlay_path = os.path.join(overlays_dir, f"{name}.png")
        write_mask(mask_path, mask)
        write_image(overlay_path, render_overlay(image, mask, overlay['color'], overlay['alpha']))
        predictions.append({
            "file": path,
            "class_prob": output.class_prob,
            "fire_pixels": int(np.count_nonzero(mask)),
            "mask": os.path.relpath(mask_path, out),
            "overlay": os.path.relpath(overlay_path, out),
        })

    write_json(os.path.join(out, "predictions.json"), {
        "predictions": predictions,
        "errors": collector.get_errors(),
    })
    logger.info(f"🖼️ {len(predictions)} of {len(images)} images written to {out}")

    if collector:
        finish_run(run_manifest, out, 1)
        raise PartialFailureError(f"{len(collector)} of {len(images)} images failed",
                                  [{"file": e["context"].get("file"), "error": e["message"]}
                                   for e in collector.get_errors()])
    finish_run(run_manifest, out, 0)
    return 0
