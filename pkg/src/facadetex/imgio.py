"""PNG/JPEG image and mask IO (Pillow-backed)."""

from __future__ import annotations

import numpy as np
from PIL import Image


def load_image(path) -> np.ndarray:
    """RGB uint8 array."""
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def save_image(array: np.ndarray, path) -> None:
    arr = np.asarray(array)
    if arr.dtype != np.uint8:
        arr = np.clip(np.rint(arr), 0, 255).astype(np.uint8)
    Image.fromarray(arr).save(path)


def load_mask(path) -> np.ndarray:
    """Boolean mask from an 8-bit image (threshold 127)."""
    with Image.open(path) as img:
        return np.asarray(img.convert("L")) > 127


def save_mask(mask: np.ndarray, path) -> None:
    save_image(np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8), path)
