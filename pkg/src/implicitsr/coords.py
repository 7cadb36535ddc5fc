"""Coordinate grids and positional features for an output resolution.

Pixels are squares; a pixel's location is its center. Global coordinates
normalize centers to [-1, 1] over the whole image: pixel i along an axis
of size n sits at -1 + (2i + 1) / n. Local coordinates measure the offset
from the center of the nearest low-resolution pixel, normalized so the LR
pixel square has half-width 1 (hence also in [-1, 1]).

With per-axis scale s = out / lr, output pixel i has LR-unit center
c = (i + 0.5) / s; its nearest LR index is floor(c) clamped to range, and
its local coordinate is 2 * (c - (j + 0.5)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numcore.tensor import Tensor


@dataclass
class CoordGrid:
    """Per-output-pixel geometry. Channel 0 is x (width axis), channel 1 is y."""

    global_xy: np.ndarray        # [2, out_h, out_w], float, in [-1, 1]
    nearest_lr_index: np.ndarray  # [2, out_h, out_w], int64, (col, row) per channel
    local_xy: np.ndarray          # [2, out_h, out_w], float, in [-1, 1]


def global_coords(n):
    """Pixel-center positions of an axis of size n, scaled to [-1, 1]."""
    return -1.0 + (2.0 * np.arange(n, dtype=np.float64) + 1.0) / n


def _axis_local(lr_n, out_n):
    s = out_n / lr_n
    c = (np.arange(out_n, dtype=np.float64) + 0.5) / s
    j = np.clip(np.floor(c).astype(np.int64), 0, lr_n - 1)
    local = np.clip(2.0 * (c - (j + 0.5)), -1.0, 1.0)
    return j, local


def make_grid(lr_h, lr_w, out_h, out_w):
    if out_h < lr_h or out_w < lr_w:
        raise ValueError(
            f"make_grid: target {out_h}x{out_w} smaller than source {lr_h}x{lr_w}"
        )
    gy = global_coords(out_h)
    gx = global_coords(out_w)
    jy, ly = _axis_local(lr_h, out_h)
    jx, lx = _axis_local(lr_w, out_w)
    ones_h = np.ones(out_h)
    ones_w = np.ones(out_w)
    global_xy = np.stack([np.outer(ones_h, gx), np.outer(gy, ones_w)])
    nearest = np.stack([
        np.broadcast_to(jx[None, :], (out_h, out_w)),
        np.broadcast_to(jy[:, None], (out_h, out_w)),
    ]).astype(np.int64)
    local_xy = np.stack([np.outer(ones_h, lx), np.outer(ly, ones_w)])
    return CoordGrid(global_xy=global_xy, nearest_lr_index=nearest, local_xy=local_xy)


def inverse_scale(lr_h, lr_w, out_h, out_w):
    """1 / mean per-axis upscale ratio."""
    s_y = out_h / lr_h
    s_x = out_w / lr_w
    return 2.0 / (s_y + s_x)


def make_positional(grid, lr_h, lr_w, out_h, out_w, batch=1, dtype=np.float32):
    """Stack (local_x, local_y, 1/mean-scale) into a [B, 3, out_h, out_w] tensor."""
    inv = inverse_scale(lr_h, lr_w, out_h, out_w)
    p = np.empty((batch, 3, out_h, out_w), dtype=dtype)
    p[:, 0] = grid.local_xy[0]
    p[:, 1] = grid.local_xy[1]
    p[:, 2] = inv
    return Tensor(p)
