"""
File helpers: atomic writes, 8-bit image/mask IO with Pillow, overlays.
"""

import io
import os
import json
import tempfile
import logging
from typing import Any, Tuple

import numpy as np
from PIL import Image

logger = logging.getLogger('attnseg.io')


def atomic_write_bytes(path: str, payload: bytes):
    """Write to a temp file in the target directory, then rename over the target"""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def atomic_write_text(path: str, text: str):
    atomic_write_bytes(path, text.encode("utf-8"))


def write_json(path: str, data: Any):
    atomic_write_text(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def read_image(path: str) -> np.ndarray:
    """8-bit RGB file -> H×W×3 float32 in [0, 1]"""
    with Image.open(path) as img:
        rgb = np.asarray(img.convert("RGB"), dtype=np.uint8)
    return rgb.astype(np.float32) / 255.0


def read_mask(path: str) -> np.ndarray:
    """Single-channel file (0 or 255) -> H×W uint8 in {0, 1}"""
    with Image.open(path) as img:
        gray = np.asarray(img.convert("L"), dtype=np.uint8)
    return (gray > 127).astype(np.uint8)


def image_to_uint8(image: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(image * 255.0), 0, 255).astype(np.uint8)


def _png_bytes(array: np.ndarray) -> bytes:
    buffer = io.BytesIO()
    Image.fromarray(array).save(buffer, format="PNG")
    return buffer.getvalue()


def write_image(path: str, image: np.ndarray):
    atomic_write_bytes(path, _png_bytes(image_to_uint8(image)))


def write_mask(path: str, mask: np.ndarray):
    atomic_write_bytes(path, _png_bytes((mask > 0).astype(np.uint8) * 255))


def resize_image(image: np.ndarray, size: Tuple[int, int]) -> np.ndarray:
    """Bilinear resize of a float image to (height, width)"""
    height, width = size
    if image.shape[:2] == (height, width):
        return image
    img = Image.fromarray(image_to_uint8(image))
    resized = img.resize((width, height), resample=Image.BILINEAR)
    return np.asarray(resized, dtype=np.float32) / 255.0


def resize_mask(mask: np.ndarray, size: Tuple[int, int]) -> np.ndarray:
    """Nearest-neighbour resize of a binary mask to (height, width)"""
    height, width = size
    if mask.shape[:2] == (height, width):
        return mask
    img = Image.fromarray((mask > 0).astype(np.uint8) * 255)
    resized = img.resize((width, height), resample=Image.NEAREST)
    return (np.asarray(resized) > 127).astype(np.uint8)


def render_overlay(image: np.ndarray, mask: np.ndarray, color=(255, 0, 255),
                   alpha: float = 0.5) -> np.ndarray:
    """Alpha-blend a highlight color over the mask pixels; returns float image in [0, 1]"""
    overlay = image.astype(np.float32).copy()
    highlight = np.asarray(color, dtype=np.float32) / 255.0
    selected = mask.astype(bool)
    overlay[selected] = (1.0 - alpha) * overlay[selected] + alpha * highlight
    return overlay
