"""8-bit image files <-> float arrays.

In-memory images are H x W x 3 float32 in [0, 1]. Quantization to 8 bits
happens only on save, via round(clamp(x, 0, 1) * 255).
"""

from __future__ import annotations

import numpy as np
from PIL import Image

IMAGE_EXTENSIONS = (".png", ".bmp")


def load_image(path):
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float32)
    return arr / 255.0


def save_image(path, img):
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"save_image: expected HxWx3, got {img.shape}")
    q = np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(q, mode="RGB").save(path)


def to_chw(img):
    return np.ascontiguousarray(np.transpose(img, (2, 0, 1)))


def to_hwc(img):
    return np.ascontiguousarray(np.transpose(img, (1, 2, 0)))
