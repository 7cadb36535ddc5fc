"""Image resizing.

Bicubic resizing implements separable cubic convolution with pixel-center
alignment: output pixel i along an axis of length n_out samples the source
at (i + 0.5) * n_in / n_out - 0.5. With antialiasing enabled and a
downscale factor below 1 the kernel is stretched by the inverse factor and
renormalized, which is the convention of mainstream resize tooling. Edge
handling clamps source indices (replicate). Output values are NOT clamped
to [0,1]; clamping happens at image-save time so the operator stays linear.

Nearest upsampling is differentiable (gradients scatter-add back to the
source cells) because it sits inside the training path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numcore.tensor import Tensor, from_op


@dataclass(frozen=True)
class BicubicKernel:
    """Cubic convolution kernel. a=-0.5 is the Catmull-Rom choice."""

    a: float = -0.5
    antialias: bool = True


def cubic_weight(x, a=-0.5):
    """Keys cubic kernel, supported on |x| < 2; reproduces constants exactly."""
    x = np.abs(np.asarray(x, dtype=np.float64))
    w = np.zeros_like(x)
    near = x <= 1.0
    far = (x > 1.0) & (x < 2.0)
    xn = x[near]
    xf = x[far]
    w[near] = (a + 2.0) * xn ** 3 - (a + 3.0) * xn ** 2 + 1.0
    w[far] = a * xf ** 3 - 5.0 * a * xf ** 2 + 8.0 * a * xf - 4.0 * a
    return w


def _axis_weights(n_in, n_out, kernel):
    """Per-output-pixel source indices and normalized weights for one axis."""
    scale = n_out / n_in
    if kernel.antialias and scale < 1.0:
        kscale = scale
        support = 2.0 / scale
    else:
        kscale = 1.0
        support = 2.0
    centers = (np.arange(n_out, dtype=np.float64) + 0.5) / scale - 0.5
    taps = int(np.ceil(2.0 * support)) + 1
    left = np.floor(centers - support).astype(np.int64) + 1
    offsets = np.arange(taps, dtype=np.int64)
    idx = left[:, None] + offsets[None, :]          # [n_out, taps]
    w = cubic_weight((centers[:, None] - idx) * kscale, a=kernel.a)
    w /= w.sum(axis=1, keepdims=True)
    idx = np.clip(idx, 0, n_in - 1)
    return idx, w


def _resize_axis(arr, n_out, axis, kernel):
    n_in = arr.shape[axis]
    if n_out == n_in:
        return arr
    idx, w = _axis_weights(n_in, n_out, kernel)
    moved = np.moveaxis(arr, axis, -1)
    gathered = moved[..., idx]                       # [..., n_out, taps]
    out = (gathered * w).sum(axis=-1)
    return np.moveaxis(out, -1, axis)


def bicubic_resize(img, out_h, out_w, kernel=BicubicKernel()):
    """Resize a [C, H, W] array (any real scale, up or down) to [C, out_h, out_w]."""
    img = img.data if isinstance(img, Tensor) else img
    img = np.asarray(img)
    if img.ndim != 3:
        raise ValueError(f"bicubic_resize: expected [C,H,W], got {img.shape}")
    if out_h < 1 or out_w < 1:
        raise ValueError(f"bicubic_resize: target size must be >= 1, got {out_h}x{out_w}")
    dtype = img.dtype if img.dtype in (np.float32, np.float64) else np.float32
    out = _resize_axis(img.astype(np.float64), out_h, 1, kernel)
    out = _resize_axis(out, out_w, 2, kernel)
    return out.astype(dtype)


def nearest_indices(n_in, n_out):
    """Nearest source index for each output pixel, clamped to range."""
    idx = np.floor((np.arange(n_out) + 0.5) * n_in / n_out).astype(np.int64)
    return np.clip(idx, 0, n_in - 1)


def nearest_upsample(feat, out_h, out_w):
    """Replicate a [B, C, h, w] feature map to [B, C, out_h, out_w].

    Differentiable: the output gradient scatter-adds onto source cells.
    """
    if not isinstance(feat, Tensor):
        feat = Tensor(feat)
    b, c, h, w = feat.shape
    if out_h < h or out_w < w:
        raise ValueError(f"nearest_upsample: target {out_h}x{out_w} below source {h}x{w}")
    iy = nearest_indices(h, out_h)
    ix = nearest_indices(w, out_w)
    out = feat.data[:, :, iy[:, None], ix[None, :]]

    flat_src = (iy[:, None] * w + ix[None, :]).reshape(-1)

    def bwd(g):
        gsrc = np.zeros((b * c, h * w), dtype=g.dtype)
        np.add.at(gsrc, (np.arange(b * c)[:, None], flat_src[None, :]), g.reshape(b * c, -1))
        return (gsrc.reshape(b, c, h, w),)

    return from_op(out, (feat,), bwd)
