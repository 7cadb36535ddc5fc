"""Input validation helpers for the public API."""

from __future__ import annotations

import numpy as np


def check_image(x, name="image"):
    """Coerce to float32 HxWx3 in [0,1] or raise."""
    arr = np.asarray(x)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"{name}: expected an HxWx3 array, got shape {arr.shape}")
    if arr.dtype == np.uint8:
        arr = arr.astype(np.float32) / 255.0
    else:
        arr = arr.astype(np.float32)
    if not np.isfinite(arr).all():
        raise ValueError(f"{name}: contains NaN or Inf")
    if arr.min() < -1e-6 or arr.max() > 1.0 + 1e-6:
        raise ValueError(
            f"{name}: values must lie in [0,1] (got [{arr.min():.3g}, {arr.max():.3g}]); "
            "pass uint8 or pre-scale")
    return np.clip(arr, 0.0, 1.0)


def check_scale(scale):
    s = float(scale)
    if not np.isfinite(s) or s < 1.0:
        raise ValueError(f"scale must be a finite real >= 1, got {scale!r}")
    return s


def check_size(size, name="size"):
    h, w = size
    h, w = int(h), int(w)
    if h < 1 or w < 1:
        raise ValueError(f"{name}: dimensions must be positive, got {h}x{w}")
    return h, w


def parse_size(text):
    """'HxW' -> (h, w)."""
    parts = str(text).lower().split("x")
    if len(parts) != 2:
        raise ValueError(f"expected HxW, got {text!r}")
    return check_size((int(parts[0]), int(parts[1])))
