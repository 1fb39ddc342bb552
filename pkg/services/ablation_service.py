"""
Controlled comparison of the four variants under one seed and one split:
single-task segmentation, plain multi-task, naive classification masking and the
attention model.
"""

import os
import logging
from typing import Dict, List, Optional, Sequence

import numpy as np

from config import Config
from models.outputs import SegClassOutput
from models.sample import DatasetManifest, Split
from models.train_config import TrainConfig
from models.variant import VARIANT_TITLES, AblationRow, AblationTable, VariantName, VariantSpec
from network.segclass_net import SegClassNet, build_model
from services.report_service import render_ablation
from services.training_service import evaluate_records, train
from utils.error_handlers import AttnSegError, ErrorCollector, ValidationError
from utils.io_utils import atomic_write_text, write_json
from utils.validation import validate_threshold

logger = logging.getLogger('attnseg.ablation')


def apply_naive_rule(output: SegClassOutput, threshold: float = Config.CLASS_THRESHOLD) -> SegClassOutput:
    """Zero the probability map when the image is classified non-fire (class_prob < threshold)"""
    validate_threshold(threshold)
    if output.class_prob is None or output.class_prob >= threshold:
        return output
    return output.with_seg_prob(np.zeros_like(output.seg_prob))


def _variant_config(variant_spec: VariantSpec, config: TrainConfig, out_dir: Optional[str]) -> TrainConfig:
    overrides = {"checkpoint_dir": os.path.join(out_dir, variant_spec.trains_as.value) if out_dir else None}
    if variant_spec.forces_lambda is not None:
        overrides["lambda_"] = variant_spec.forces_lambda
    return config.copy(**overrides)


def run_ablation(manifest: DatasetManifest, variants: Sequence[VariantSpec], config: TrainConfig,
                 out_dir: Optional[str] = None) -> AblationTable:
    """
    Train every variant with the same seed on the same split and evaluate on the test split.
    A failing variant yields a failed row; the others are still reported. naive_mask reuses
    the multitask_plain network when both are requested.

    Raises:
        ValidationError: empty variant list or an unsplit manifest
    """
    if not variants:
        raise ValidationError("at least one variant is required", "variants")
    if not manifest.is_split:
        raise ValidationError("manifest must be split before an ablation", "manifest")

    digest = manifest.split_digest()
    test_records = manifest.records_for(Split.TEST)
    trained: Dict[VariantName, SegClassNet] = {}
    collector = ErrorCollector()
    rows: List[AblationRow] = []

    logger.info(f"🔬 Ablation over {', '.join(v.name.value for v in variants)} "
                f"(seed {config.seed}, split {digest[:12]})")

    for variant_spec in variants:
        variant_config = _variant_config(variant_spec, config, out_dir)
        try:
            model = trained.get(variant_spec.trains_as)
            if model is None:
                model = build_model(variant_spec.model_config, seed=variant_config.seed)
                model = train(model, manifest, variant_config).model
                trained[variant_spec.trains_as] = model
            else:
                logger.info(f"♻️ {variant_spec.name.value} reuses the trained {variant_spec.trains_as.value} network")

            transform = apply_naive_rule if variant_spec.name == VariantName.NAIVE_MASK else None
            _, report = evaluate_records(model, test_records, variant_config, transform=transform)
            rows.append(AblationRow(variant_spec.name, report, split_digest=digest, seed=config.seed))
            logger.info(f"✅ {VARIANT_TITLES[variant_spec.name]}: mIoU {report.mean_iou:.4f}, "
                        f"consistency {report.avg_consistency:.4f}")
        except (AttnSegError, OSError, RuntimeError, ValueError) as e:
            collector.add_error(e, {"variant": variant_spec.name.value})
            rows.append(AblationRow(variant_spec.name, None, status="failed", error=str(e),
                                    split_digest=digest, seed=config.seed))
            logger.error(f"❌ Variant {variant_spec.name.value} failed: {e}")

    table = AblationTable(rows, seed=config.seed)
    if out_dir:
        write_ablation(table, out_dir)
    if collector:
        logger.warning(f"⚠️ {len(collector)} variant(s) failed: {collector.counts_by_type()}")
    return table


def run_ablation_seeds(manifest: DatasetManifest, variants: Sequence[VariantSpec],
                       config: TrainConfig, seeds: Sequence[int],
                       out_dir: Optional[str] = None) -> List[AblationTable]:
    """One table per seed; the split stays the one stored in the manifest"""
    tables = []
    for seed in seeds:
        seed_dir = os.path.join(out_dir, f"seed_{seed}") if out_dir else None
        tables.append(run_ablation(manifest, variants, config.copy(seed=seed), seed_dir))
    return tables


def write_ablation(table: AblationTable, out_dir: str) -> Dict[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    json_path = os.path.join(out_dir, "ablation.json")
    text_path = os.path.join(out_dir, "ablation.txt")
    write_json(json_path, table.to_dict())
    atomic_write_text(text_path, render_ablation(table))
    return {"json": json_path, "text": text_path}
