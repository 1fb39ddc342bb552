import os
import shutil
import logging

from config import get_config
from models.sample import SynthConfig
from services.dataset_service import STANDARD_LAYOUT, save_corpus, split
from services.synthetic_service import generate_synthetic
from utils.error_handlers import UsageError, cli_error_handler
from commands.common import (
    common_parser, finish_run, is_non_empty_dir, load_settings_file, require_out, resolve,
    resolve_seed, start_run
)

logger = logging.getLogger('attnseg.cli.synth')


def register(subparsers):
    parser = subparsers.add_parser("synth", parents=[common_parser()],
                                   help="generate a synthetic fire corpus")
    parser.add_argument("--n", dest="n_images", type=int, default=None, help="number of images")
    parser.add_argument("--size", dest="image_size", type=int, default=None, help="image side in pixels")
    parser.add_argument("--fire-fraction", type=float, default=None)
    parser.add_argument("--distractor-fraction", type=float, default=None)
    parser.add_argument("--min-area", dest="min_blob_area", type=int, default=None)
    parser.add_argument("--max-area", dest="max_blob_area", type=int, default=None)
    parser.add_argument("--force", action="store_true", help="overwrite a non-empty output directory")
    parser.set_defaults(func=run)
    return parser


@cli_error_handler
def run(args):
    settings = load_settings_file(args.config)
    defaults = get_config().SYNTH_SETTINGS
    seed = resolve_seed(args, settings)
    out = require_out(args, settings)

    synth_config = SynthConfig(
        n_images=resolve(args, settings, "n_images", defaults["n_images"]),
        image_size=resolve(args, settings, "image_size", defaults["image_size"]),
        fire_fraction=resolve(args, settings, "fire_fraction", defaults["fire_fraction"]),
        distractor_fraction=resolve(args, settings, "distractor_fraction",
                                    defaults["distractor_fraction"]),
        min_blob_area=resolve(args, settings, "min_blob_area", defaults["min_blob_area"]),
        max_blob_area=resolve(args, settings, "max_blob_area", defaults["max_blob_area"]),
        seed=seed,
    ).validate()

    if is_non_empty_dir(out):
        if not args.force:
            raise UsageError(f"Output directory {out} is not empty; pass --force to overwrite")
        logger.warning(f"⚠️ Overwriting {out}")
        for name in (STANDARD_LAYOUT.images_dir, STANDARD_LAYOUT.masks_dir):
            shutil.rmtree(os.path.join(out, name), ignore_errors=True)

    manifest = start_run("synth", {**synth_config.to_dict(), "out": out}, seed)
    corpus = split(generate_synthetic(synth_config), seed)
    save_corpus(corpus, out)
    finish_run(manifest, out, 0)
    logger.info(f"✅ Synthetic corpus ready in {out}: {corpus.split_counts()}")
    return 0
