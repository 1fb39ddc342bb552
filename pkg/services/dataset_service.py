"""
Corpus ingestion, deterministic stratified splitting, on-disk layout and the torch Dataset.

Directory layout:
    root/images/<id>.png      RGB, 8 bit per channel
    root/masks/<id>.png       single channel, 0 or 255 (optional for non-fire images)
    root/labels.csv           columns id,label
    root/manifest.json        {records, split_assignment, seed}
"""

import csv
import io
import json
import math
import os
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Tuple

import numpy as np
import torch
from PIL import UnidentifiedImageError
from torch.utils.data import Dataset

from config import Config
from models.sample import DatasetManifest, SampleRecord, Split
from utils.error_handlers import DatasetError
from utils.io_utils import (
    atomic_write_text, read_image, read_mask, resize_image, resize_mask,
    write_image, write_json, write_mask
)

logger = logging.getLogger('attnseg.data')

MANIFEST_FILE = "manifest.json"


class CorpusLayout:
    """Names of the pieces of a corpus directory"""

    def __init__(self, images_dir: str = "images", masks_dir: str = "masks",
                 labels_file: str = "labels.csv", extensions=(".png", ".jpg", ".jpeg")):
        self.images_dir = images_dir
        self.masks_dir = masks_dir
        self.labels_file = labels_file
        self.extensions = tuple(extensions)


STANDARD_LAYOUT = CorpusLayout()


def _read_labels(path: str) -> Dict[str, int]:
    if not os.path.isfile(path):
        raise DatasetError(f"Label file not found: {path}", path=path)

    labels = {}
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames is None or not {"id", "label"} <= set(reader.fieldnames):
                raise DatasetError(f"{path}: expected columns id,label", path=path)
            for row in reader:
                record_id = row["id"].strip()
                value = row["label"].strip()
                if value not in ("0", "1"):
                    raise DatasetError(f"{path}: label for {record_id} must be 0 or 1, got {value!r}",
                                       record_id=record_id, path=path)
                if record_id in labels:
                    raise DatasetError(f"{path}: duplicate label entry for {record_id}",
                                       record_id=record_id, path=path)
                labels[record_id] = int(value)
    except (OSError, UnicodeDecodeError, csv.Error) as e:
        raise DatasetError(f"Unreadable label file {path}: {e}", path=path)
    return labels


def _index_files(directory: str, extensions: Tuple[str, ...]) -> Dict[str, str]:
    """id -> path for every file with an accepted extension"""
    if not os.path.isdir(directory):
        return {}
    found = {}
    for name in sorted(os.listdir(directory)):
        stem, ext = os.path.splitext(name)
        if ext.lower() in extensions:
            if stem in found:
                raise DatasetError(f"Two files share the id {stem} in {directory}", record_id=stem)
            found[stem] = os.path.join(directory, name)
    return found


def _load_record(record_id: str, label: int, image_path: str,
                 mask_path: Optional[str]) -> SampleRecord:
    try:
        image = read_image(image_path)
    except (OSError, UnidentifiedImageError, ValueError) as e:
        raise DatasetError(f"Unreadable image {image_path}: {e}", record_id=record_id, path=image_path)

    if mask_path is not None:
        try:
            mask = read_mask(mask_path)
        except (OSError, UnidentifiedImageError, ValueError) as e:
            raise DatasetError(f"Unreadable mask {mask_path}: {e}", record_id=record_id, path=mask_path)
    elif label == 0:
        # non-fire images may ship without a mask file
        mask = np.zeros(image.shape[:2], dtype=np.uint8)
    else:
        raise DatasetError(f"{record_id}: fire image has no mask file", record_id=record_id)

    record = SampleRecord(record_id, image, mask, label, image_path=image_path, mask_path=mask_path)
    return record.validate()


def load_corpus(root_path: str, layout: CorpusLayout = STANDARD_LAYOUT,
                max_workers: int = 8) -> DatasetManifest:
    """
    Ingest images, masks and labels from a corpus directory.

    Raises:
        DatasetError: missing label entry (naming the id), size mismatch, label/mask
            inconsistency, or an unreadable file (naming the path)
    """
    logger.info(f"📂 Loading corpus from {root_path}")
    labels = _read_labels(os.path.join(root_path, layout.labels_file))
    images = _index_files(os.path.join(root_path, layout.images_dir), layout.extensions)
    masks = _index_files(os.path.join(root_path, layout.masks_dir), layout.extensions)

    for record_id in images:
        if record_id not in labels:
            raise DatasetError(f"Missing label entry for {record_id}", record_id=record_id)
    for record_id in labels:
        if record_id not in images:
            path = os.path.join(root_path, layout.images_dir, record_id)
            raise DatasetError(f"Label entry {record_id} has no image file ({path}.*)",
                               record_id=record_id, path=path)
    stray = sorted(set(masks) - set(images))
    if stray:
        logger.warning(f"⚠️ Ignoring {len(stray)} masks without images: {stray[:5]}")

    ids = sorted(images)
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        records = list(executor.map(
            lambda rid: _load_record(rid, labels[rid], images[rid], masks.get(rid)), ids
        ))

    synthesized = sum(1 for r in records if r.mask_path is None)
    logger.info(f"✅ Loaded {len(records)} records ({sum(r.label for r in records)} fire, "
                f"{synthesized} all-zero masks synthesized)")
    return DatasetManifest(records)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _apportion(total: int, sizes: Dict[int, int], available: Dict[int, int]) -> Dict[int, int]:
    """Share `total` slots between label groups proportionally to their sizes"""
    n = sum(sizes.values())
    quotas = {c: total * sizes[c] / n for c in sizes}
    alloc = {c: min(int(math.floor(quotas[c])), available[c]) for c in sizes}
    # both classes in every split when a class can afford it
    for c in sizes:
        if alloc[c] == 0 and sizes[c] >= 3 and available[c] > 0:
            alloc[c] = 1
    while sum(alloc.values()) < total:
        candidates = [c for c in sizes if alloc[c] < available[c]]
        if not candidates:
            break
        c = max(candidates, key=lambda k: (quotas[k] - alloc[k], sizes[k], -k))
        alloc[c] += 1
    while sum(alloc.values()) > total:
        c = max(sizes, key=lambda k: (alloc[k] - quotas[k], alloc[k], k))
        alloc[c] -= 1
    return alloc


def split(manifest: DatasetManifest, seed: int,
          fractions: Dict[str, float] = None) -> DatasetManifest:
    """
    Deterministic 60/20/20 split, stratified by label.

    Raises:
        DatasetError: fewer than 5 records
    """
    fractions = fractions or Config.SPLIT_FRACTIONS
    n = len(manifest)
    if n < Config.MIN_CORPUS_SIZE:
        raise DatasetError(f"Need at least {Config.MIN_CORPUS_SIZE} records to form three "
                           f"non-empty splits, got {n}")

    n_val = max(1, _round_half_up(n * fractions["val"]))
    n_test = max(1, _round_half_up(n * fractions["test"]))

    groups: Dict[int, List[str]] = {}
    for record in sorted(manifest.records, key=lambda r: r.id):
        groups.setdefault(record.label, []).append(record.id)
    sizes = {label: len(ids) for label, ids in groups.items()}

    val_alloc = _apportion(n_val, sizes, {c: sizes[c] - 1 for c in sizes})
    test_alloc = _apportion(n_test, sizes, {c: sizes[c] - val_alloc[c] - 1 for c in sizes})

    rng = np.random.default_rng(seed)
    assignment: Dict[str, Split] = {}
    for label in sorted(groups):
        ids = groups[label]
        order = [ids[i] for i in rng.permutation(len(ids))]
        n_v, n_t = val_alloc[label], test_alloc[label]
        for rid in order[:n_v]:
            assignment[rid] = Split.VAL
        for rid in order[n_v:n_v + n_t]:
            assignment[rid] = Split.TEST
        for rid in order[n_v + n_t:]:
            assignment[rid] = Split.TRAIN

    result = DatasetManifest(manifest.records, assignment, seed)
    logger.info(f"🔀 Split {n} records with seed {seed}: {result.split_counts()}")
    return result


def save_corpus(manifest: DatasetManifest, root: str, layout: CorpusLayout = STANDARD_LAYOUT,
                max_workers: int = 8) -> str:
    """Write the directory layout plus manifest.json; returns the manifest path"""
    images_dir = os.path.join(root, layout.images_dir)
    masks_dir = os.path.join(root, layout.masks_dir)
    os.makedirs(images_dir, exist_ok=True)
    os.makedirs(masks_dir, exist_ok=True)

    def write_record(record: SampleRecord):
        record.image_path = os.path.join(layout.images_dir, f"{record.id}.png")
        write_image(os.path.join(root, record.image_path), record.image)
        if record.mask is not None:
            record.mask_path = os.path.join(layout.masks_dir, f"{record.id}.png")
            write_mask(os.path.join(root, record.mask_path), record.mask)

    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        list(executor.map(write_record, manifest.records))

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["id", "label"])
    for record in manifest.records:
        writer.writerow([record.id, record.label])
    atomic_write_text(os.path.join(root, layout.labels_file), buffer.getvalue())

    manifest_path = os.path.join(root, MANIFEST_FILE)
    write_json(manifest_path, manifest.to_dict())
    logger.info(f"💾 Wrote {len(manifest)} records to {root}")
    return manifest_path


def load_manifest(root: str, seed: Optional[int] = None,
                  layout: CorpusLayout = STANDARD_LAYOUT) -> DatasetManifest:
    """
    Reload a dataset directory and restore its stored split; re-split with the
    stored (or given) seed when no usable assignment is stored.
    """
    manifest = load_corpus(root, layout)
    manifest_path = os.path.join(root, MANIFEST_FILE)
    stored = {}
    if os.path.isfile(manifest_path):
        try:
            with open(manifest_path, "r", encoding="utf-8") as f:
                stored = json.load(f)
        except (OSError, ValueError) as e:
            raise DatasetError(f"Unreadable manifest {manifest_path}: {e}", path=manifest_path)

    stored_seed = stored.get("seed", 0)
    assignment = stored.get("split_assignment") or {}
    if seed is None or seed == stored_seed:
        if set(assignment) == set(manifest.ids):
            try:
                split_assignment = {rid: Split(value) for rid, value in assignment.items()}
            except ValueError as e:
                raise DatasetError(f"{manifest_path}: bad split name: {e}", path=manifest_path)
            logger.info(f"📋 Restored stored split (seed {stored_seed})")
            return DatasetManifest(manifest.records, split_assignment, stored_seed)
        if assignment:
            logger.warning("⚠️ Stored split does not cover the corpus ids; re-splitting")
    return split(manifest, stored_seed if seed is None else seed)


class SampleDataset(Dataset):
    """Serves (image, mask, label) tensors for one split"""

    def __init__(self, records: List[SampleRecord], input_size: Optional[int] = None,
                 horizontal_flip: bool = False, seed: int = 0):
        self.records = records
        self.input_size = input_size
        self.horizontal_flip = horizontal_flip
        self.seed = seed
        self.epoch = 0

    def set_epoch(self, epoch: int):
        self.epoch = epoch

    def __len__(self):
        return len(self.records)

    def __getitem__(self, idx):
        record = self.records[idx]
        image = record.image
        mask = record.mask if record.mask is not None else np.zeros(image.shape[:2], dtype=np.uint8)

        if self.input_size is not None:
            size = (self.input_size, self.input_size)
            image = resize_image(image, size)
            mask = resize_mask(mask, size)

        if self.horizontal_flip:
            # seeded per (seed, epoch, index) so worker count does not change the draw
            rng = np.random.default_rng([self.seed, self.epoch, idx])
            if rng.random() < 0.5:
                image = image[:, ::-1]
                mask = mask[:, ::-1]

        return {
            "image": torch.from_numpy(np.ascontiguousarray(image.transpose(2, 0, 1), dtype=np.float32)),
            "mask": torch.from_numpy(np.ascontiguousarray(mask[None], dtype=np.float32)),
            "label": torch.tensor(float(record.label)),
            "index": idx,
        }
