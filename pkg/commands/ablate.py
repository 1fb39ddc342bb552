import logging

from models.variant import VariantName, VariantSpec
from services.ablation_service import run_ablation
from services.dataset_service import load_manifest
from services.report_service import render_ablation
from utils.error_handlers import PartialFailureError, UsageError, cli_error_handler
from commands.common import (
    common_parser, finish_run, load_settings_file, require, require_out, resolve, resolve_seed, start_run
)
from commands.train import add_model_flags, add_train_flags, resolve_base_model, resolve_train_config

logger = logging.getLogger('attnseg.cli.ablate')

ALL_VARIANTS = [v.value for v in VariantName]


def register(subparsers):
    parser = subparsers.add_parser("ablate", parents=[common_parser()],
                                   help="train and compare the baseline variants")
    parser.add_argument("--data", default=None, help="dataset directory (required unless --config supplies it)")
    parser.add_argument("--variants", nargs="+", default=None,
                        help=f"subset of {', '.join(ALL_VARIANTS)} (default: all)")
    add_model_flags(parser)
    add_train_flags(parser)
    parser.set_defaults(func=run)
    return parser


def _parse_variants(names):
    unknown = [name for name in names if name not in ALL_VARIANTS]
    if unknown:
        raise UsageError(f"Unknown variant(s) {', '.join(unknown)}; expected {', '.join(ALL_VARIANTS)}")
    # request order, duplicates dropped
    return [VariantName(name) for name in dict.fromkeys(names)]


@cli_error_handler
def run(args):
    settings = load_settings_file(args.config)
    data = require(args, settings, "data", "--data")
    seed = resolve_seed(args, settings)
    out = require_out(args, settings)
    names = _parse_variants(resolve(args, settings, "variants", ALL_VARIANTS))

    base = resolve_base_model(args, settings)
    train_config = resolve_train_config(args, settings, seed, base.input_size, out)
    variants = [VariantSpec(name, base) for name in names]
    for variant_spec in variants:
        variant_spec.model_config.validate()

    manifest = load_manifest(data, seed=None)

    run_manifest = start_run("ablate", {
        "data": data,
        "out": out,
        "variants": [name.value for name in names],
        "model": base.to_dict(),
        **train_config.to_dict(),
        "split_digest": manifest.split_digest(),
    }, seed)

    table = run_ablation(manifest, variants, train_config, out_dir=out)
    logger.info("\n" + render_ablation(table))

    failed = [row for row in table.rows if row.failed]
    if failed:
        finish_run(run_manifest, out, 1)
        raise PartialFailureError(f"{len(failed)} of {len(table.rows)} variants failed",
                                  [{"variant": row.variant.value, "error": row.error} for row in failed])
    finish_run(run_manifest, out, 0)
    return 0
