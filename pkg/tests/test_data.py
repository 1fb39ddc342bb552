import os

import numpy as np
import pytest
import torch

from models.sample import DatasetManifest, SampleRecord, Split, SynthConfig
from services.dataset_service import SampleDataset, load_corpus, load_manifest, save_corpus, split
from services.synthetic_service import generate_synthetic
from utils.error_handlers import DatasetError, ValidationError
from utils.io_utils import write_image, write_mask


def _write_labels(root, labels):
    lines = ["id,label"] + [f"{rid},{label}" for rid, label in labels.items()]
    (root / "labels.csv").write_text("\n".join(lines) + "\n")


def _fire_mask(size=16):
    mask = np.zeros((size, size), dtype=np.uint8)
    mask[4:8, 5:9] = 1
    return mask


def _write_corpus(root, n_fire=6, n_plain=4, size=16):
    rng = np.random.default_rng(0)
    labels = {}
    for i in range(n_fire + n_plain):
        rid = f"img{i:02d}"
        write_image(str(root / "images" / f"{rid}.png"), rng.random((size, size, 3)))
        if i < n_fire:
            write_mask(str(root / "masks" / f"{rid}.png"), _fire_mask(size))
            labels[rid] = 1
        else:
            labels[rid] = 0
    _write_labels(root, labels)
    return labels


def _records(n_fire, n_plain, size=4):
    records = []
    for i in range(n_fire + n_plain):
        label = int(i < n_fire)
        mask = np.zeros((size, size), dtype=np.uint8)
        mask[0, 0] = label
        records.append(SampleRecord(f"r{i:03d}", np.zeros((size, size, 3), np.float32), mask, label))
    return DatasetManifest(records)


# --- load_corpus ---

def test_load_corpus_synthesizes_missing_non_fire_masks(tmp_path):
    _write_corpus(tmp_path)
    manifest = load_corpus(str(tmp_path))

    assert len(manifest) == 10
    plain = [r for r in manifest.records if r.label == 0]
    assert len(plain) == 4
    for record in plain:
        assert record.mask.shape == (16, 16)
        assert not record.mask.any()
    for record in manifest.records:
        assert record.label == int(record.mask.sum() > 0)


def test_load_corpus_rejects_size_mismatch(tmp_path):
    _write_corpus(tmp_path, n_fire=1, n_plain=0, size=64)
    write_mask(str(tmp_path / "masks" / "img00.png"), _fire_mask(32))
    with pytest.raises(DatasetError, match="size mismatch"):
        load_corpus(str(tmp_path))


def test_load_corpus_rejects_label_mask_inconsistency(tmp_path):
    _write_corpus(tmp_path, n_fire=1, n_plain=0)
    write_mask(str(tmp_path / "masks" / "img00.png"), np.zeros((16, 16), np.uint8))
    with pytest.raises(DatasetError, match="label/mask inconsistency"):
        load_corpus(str(tmp_path))


def test_load_corpus_names_missing_label(tmp_path):
    labels = _write_corpus(tmp_path, n_fire=2, n_plain=2)
    del labels["img03"]
    _write_labels(tmp_path, labels)
    with pytest.raises(DatasetError) as exc_info:
        load_corpus(str(tmp_path))
    assert exc_info.value.record_id == "img03"


def test_load_corpus_reports_unreadable_image(tmp_path):
    _write_corpus(tmp_path, n_fire=2, n_plain=2)
    bad = tmp_path / "images" / "img03.png"
    bad.write_bytes(b"not a png")
    with pytest.raises(DatasetError) as exc_info:
        load_corpus(str(tmp_path))
    assert exc_info.value.path == str(bad)


# --- split ---

def test_split_proportions():
    manifest = split(_records(50, 50), seed=7)
    assert manifest.split_counts() == {"train": 60, "val": 20, "test": 20}


def test_split_is_a_stratified_partition():
    manifest = split(_records(50, 50), seed=7)
    assert set(manifest.split_assignment) == set(manifest.ids)
    for name in Split:
        labels = {r.label for r in manifest.records_for(name)}
        assert labels == {0, 1}


def test_split_is_deterministic():
    first = split(_records(6, 4), seed=11)
    second = split(_records(6, 4), seed=11)
    assert first.split_assignment == second.split_assignment
    assert first.split_digest() == second.split_digest()


def test_split_small_corpus_keeps_every_split_non_empty():
    counts = split(_records(3, 2), seed=0).split_counts()
    assert sum(counts.values()) == 5
    assert all(count >= 1 for count in counts.values())


def test_split_rejects_fewer_than_five_records():
    with pytest.raises(DatasetError):
        split(_records(2, 2), seed=0)


# --- generate_synthetic ---

def test_synthetic_class_counts():
    manifest = generate_synthetic(SynthConfig(n_images=200, image_size=64, fire_fraction=0.5,
                                              distractor_fraction=0.5, seed=1))
    fire = [r for r in manifest.records if r.label == 1]
    plain = [r for r in manifest.records if r.label == 0]
    assert len(fire) == 100 and len(plain) == 100
    assert all(r.mask.any() for r in fire)
    assert not any(r.mask.any() for r in plain)
    assert sum(1 for r in plain if r.blobs) == 50


def test_synthetic_without_fire():
    manifest = generate_synthetic(SynthConfig(n_images=10, image_size=32, fire_fraction=0.0,
                                              min_blob_area=12, max_blob_area=100, seed=2))
    assert all(r.label == 0 and not r.mask.any() for r in manifest.records)


def test_synthetic_is_deterministic(tiny_synth_config):
    first = generate_synthetic(tiny_synth_config)
    second = generate_synthetic(tiny_synth_config)
    for a, b in zip(first.records, second.records):
        assert a.image.tobytes() == b.image.tobytes()
        assert a.mask.tobytes() == b.mask.tobytes()


def test_synthetic_masks_are_union_of_blob_supports(tiny_synth_config):
    size = tiny_synth_config.image_size
    for record in generate_synthetic(tiny_synth_config).records:
        expected = np.zeros((size, size), dtype=bool)
        if record.label == 1:
            for blob in record.blobs:
                expected |= blob.support(size)
        np.testing.assert_array_equal(record.mask.astype(bool), expected)


def test_synthetic_blob_colors_are_warm(tiny_synth_config):
    for record in generate_synthetic(tiny_synth_config).records:
        for blob in record.blobs:
            red, green, blue = blob.color
            assert red > green > blue


def test_synthetic_rejects_tiny_corpus():
    with pytest.raises(ValidationError):
        generate_synthetic(SynthConfig(n_images=3))


# --- on-disk layout ---

def test_save_and_reload_restores_split(tmp_path, tiny_manifest):
    root = str(tmp_path / "ds")
    save_corpus(tiny_manifest, root)
    assert os.path.isfile(os.path.join(root, "labels.csv"))
    assert len(os.listdir(os.path.join(root, "images"))) == len(tiny_manifest)

    reloaded = load_manifest(root)
    assert reloaded.split_digest() == tiny_manifest.split_digest()
    for record in tiny_manifest.records:
        other = reloaded.record(record.id)
        np.testing.assert_array_equal(other.image, record.image)
        np.testing.assert_array_equal(other.mask, record.mask)


def test_reload_with_other_seed_resplits(dataset_dir, tiny_manifest):
    reloaded = load_manifest(dataset_dir, seed=99)
    assert reloaded.seed == 99
    assert sorted(reloaded.split_assignment) == sorted(tiny_manifest.ids)


# --- SampleDataset ---

def test_sample_dataset_tensors(tiny_manifest):
    dataset = SampleDataset(tiny_manifest.records, input_size=16)
    item = dataset[0]
    assert item["image"].shape == (3, 16, 16)
    assert item["mask"].shape == (1, 16, 16)
    assert item["image"].dtype == torch.float32
    assert set(torch.unique(item["mask"]).tolist()) <= {0.0, 1.0}


def test_sample_dataset_flip_is_seeded(tiny_manifest):
    first = SampleDataset(tiny_manifest.records, horizontal_flip=True, seed=5)
    second = SampleDataset(tiny_manifest.records, horizontal_flip=True, seed=5)
    for epoch in (1, 2):
        first.set_epoch(epoch)
        second.set_epoch(epoch)
        for idx in range(len(first)):
            assert torch.equal(first[idx]["image"], second[idx]["image"])
            assert torch.equal(first[idx]["mask"], second[idx]["mask"])
