"""
Desk-scale synthetic fire corpus.

Fire images carry 1-3 warm elliptical blobs with a bright radial core and a gray smoke
haze above them. Distractor images carry warm blobs from the same hue range, flat shaded
and without smoke, and all-zero masks.
"""

import math
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Tuple

import numpy as np

from models.sample import Blob, BlobKind, DatasetManifest, SampleRecord, SynthConfig

logger = logging.getLogger('attnseg.data.synthetic')

FIRE_CORE = np.array([1.0, 0.92, 0.62])
SMOKE_GRAY = np.array([0.55, 0.55, 0.55])
SMOKE_ALPHA = 0.35


def _warm_color(rng: np.random.Generator) -> List[float]:
    """R > G > B"""
    red = rng.uniform(0.85, 1.0)
    green = red * rng.uniform(0.3, 0.65)
    blue = green * rng.uniform(0.05, 0.5)
    return [float(red), float(green), float(blue)]


def _background(rng: np.random.Generator, size: int) -> np.ndarray:
    """Cool-toned vertical gradient with mild noise"""
    top = np.array([rng.uniform(0.05, 0.25), rng.uniform(0.25, 0.45), rng.uniform(0.5, 0.75)])
    bottom = np.array([rng.uniform(0.05, 0.2), rng.uniform(0.2, 0.4), rng.uniform(0.3, 0.5)])
    ramp = np.linspace(0.0, 1.0, size)[:, None, None]
    image = (1.0 - ramp) * top + ramp * bottom
    image = np.broadcast_to(image, (size, size, 3)).copy()
    image += rng.normal(0.0, 0.02, size=image.shape)
    return np.clip(image, 0.0, 1.0)


def _sample_blob(rng: np.random.Generator, config: SynthConfig, kind: BlobKind) -> Blob:
    size = config.image_size
    area = rng.uniform(config.min_blob_area, config.max_blob_area)
    ratio = rng.uniform(0.5, 1.0)
    semi_major = max(math.sqrt(area / (math.pi * ratio)), 1.0)
    semi_minor = max(semi_major * ratio, 1.0)
    margin = min(int(math.ceil(semi_major)), size // 2 - 1)
    cx = int(rng.integers(margin, size - margin))
    cy = int(rng.integers(margin, size - margin))
    angle = float(rng.uniform(0.0, math.pi))
    return Blob(cx, cy, float(semi_major), float(semi_minor), angle, _warm_color(rng), kind)


def _radial_distance(blob: Blob, size: int) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    dx = xx - blob.cx
    dy = yy - blob.cy
    cos_t, sin_t = np.cos(blob.angle), np.sin(blob.angle)
    u = (dx * cos_t + dy * sin_t) / blob.semi_major
    v = (-dx * sin_t + dy * cos_t) / blob.semi_minor
    return np.sqrt(u * u + v * v)


def _paint_smoke(image: np.ndarray, blob: Blob):
    size = image.shape[0]
    smoke = Blob(blob.cx, int(round(blob.cy - 1.6 * blob.semi_major)),
                 1.4 * blob.semi_major, 1.1 * blob.semi_major, 0.0, list(SMOKE_GRAY))
    region = smoke.support(size)
    image[region] = (1.0 - SMOKE_ALPHA) * image[region] + SMOKE_ALPHA * SMOKE_GRAY


def _paint_fire(image: np.ndarray, blob: Blob) -> np.ndarray:
    size = image.shape[0]
    distance = _radial_distance(blob, size)
    inside = blob.support(size)
    weight = ((1.0 - np.clip(distance, 0.0, 1.0)) ** 2)[..., None]
    flame = weight * FIRE_CORE + (1.0 - weight) * np.asarray(blob.color)
    image[inside] = flame[inside]
    return inside


def _paint_flat(image: np.ndarray, blob: Blob) -> np.ndarray:
    inside = blob.support(image.shape[0])
    image[inside] = np.asarray(blob.color)
    return inside


def render_scene(seed_key: Tuple[int, int], config: SynthConfig,
                 kind: str) -> Tuple[np.ndarray, np.ndarray, List[Blob]]:
    """
    Render one image. kind is 'fire', 'distractor' or 'plain'.

    Returns:
        (H×W×3 float32 image on the 8-bit grid, H×W uint8 mask, painted blobs)
    """
    rng = np.random.default_rng(list(seed_key))
    size = config.image_size
    image = _background(rng, size)
    mask = np.zeros((size, size), dtype=np.uint8)
    blobs: List[Blob] = []

    if kind == "fire":
        for _ in range(int(rng.integers(1, 4))):
            blob = _sample_blob(rng, config, BlobKind.FIRE)
            _paint_smoke(image, blob)
            blobs.append(blob)
        for blob in blobs:
            mask |= _paint_fire(image, blob).astype(np.uint8)
    elif kind == "distractor":
        for _ in range(int(rng.integers(1, 4))):
            blob = _sample_blob(rng, config, BlobKind.DISTRACTOR)
            _paint_flat(image, blob)
            blobs.append(blob)

    # quantize so the PNG round trip is lossless
    image = np.rint(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8).astype(np.float32) / 255.0
    return image, mask, blobs


def generate_synthetic(config: SynthConfig, max_workers: int = 4) -> DatasetManifest:
    """
    Deterministic synthetic corpus: exactly round(n·fire_fraction) fire images, and
    round(n_nonfire·distractor_fraction) of the non-fire images carry distractor blobs.

    Raises:
        ValidationError: invalid config (including n_images < 5)
    """
    config.validate()
    n = config.n_images
    n_fire = int(math.floor(n * config.fire_fraction + 0.5))
    n_distractor = int(math.floor((n - n_fire) * config.distractor_fraction + 0.5))

    order = np.random.default_rng(config.seed).permutation(n)
    kinds = ["plain"] * n
    for position, index in enumerate(order):
        if position < n_fire:
            kinds[index] = "fire"
        elif position < n_fire + n_distractor:
            kinds[index] = "distractor"

    logger.info(f"🎨 Generating {n} synthetic images ({n_fire} fire, {n_distractor} distractor, "
                f"size {config.image_size}, seed {config.seed})")

    def build(index: int) -> SampleRecord:
        image, mask, blobs = render_scene((config.seed, index), config, kinds[index])
        record = SampleRecord(f"synth_{index:05d}", image, mask, int(kinds[index] == "fire"),
                              blobs=blobs)
        return record.validate()

    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        records = list(executor.map(build, range(n)))

    return DatasetManifest(records, seed=config.seed)
