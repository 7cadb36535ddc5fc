"""Image quality metrics: PSNR, SSIM, and LR consistency.

Defaults follow the full-image RGB convention: metrics are computed over
all pixels and channels of the float images (pre-quantization), with no
border crop. Flags exist for the luma-only and border-cropped variants so
convention mismatches can be diagnosed; the convention used is carried in
the report.

SSIM uses an 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03, and
valid-region windowing (no padding), per channel, averaged over channels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .resample import BicubicKernel, bicubic_resize


@dataclass
class MetricReport:
    psnr_db: float
    ssim: float
    lr_psnr_db: float
    flags: dict = field(default_factory=dict)


def rgb_to_luma(img):
    """ITU-R BT.601 luma on the [0,1] scale (the classic SR-benchmark Y channel)."""
    coeff = np.array([65.481, 128.553, 24.966], dtype=np.float64) / 255.0
    return img @ coeff + 16.0 / 255.0


def _prepare(a, b, channels="rgb", border_crop=0, on_8bit=False):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"metric inputs differ in shape: {a.shape} vs {b.shape}")
    if on_8bit:
        a = np.round(np.clip(a, 0, 1) * 255.0) / 255.0
        b = np.round(np.clip(b, 0, 1) * 255.0) / 255.0
    if channels == "y":
        a = rgb_to_luma(a)[..., None]
        b = rgb_to_luma(b)[..., None]
    if border_crop:
        c = border_crop
        a = a[c:-c, c:-c]
        b = b[c:-c, c:-c]
    return a, b


def psnr(a, b, data_range=1.0, channels="rgb", border_crop=0, on_8bit=False):
    """10*log10(range^2 / MSE); +inf for identical images."""
    a, b = _prepare(a, b, channels, border_crop, on_8bit)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(data_range * data_range / mse)


def _gaussian_kernel(size=11, sigma=1.5):
    r = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    k = np.exp(-(r ** 2) / (2.0 * sigma ** 2))
    return k / k.sum()


def _filter_valid(img, k):
    # separable valid-mode filtering of a 2-d array
    win = sliding_window_view(img, k.size, axis=1)
    img = np.tensordot(win, k, axes=([2], [0]))
    win = sliding_window_view(img, k.size, axis=0)
    return np.tensordot(win, k, axes=([2], [0]))


def ssim(a, b, data_range=1.0, channels="rgb", border_crop=0, on_8bit=False,
         window_size=11, sigma=1.5, k1=0.01, k2=0.03):
    a, b = _prepare(a, b, channels, border_crop, on_8bit)
    if a.shape[0] < window_size or a.shape[1] < window_size:
        raise ValueError(f"ssim: image {a.shape[:2]} smaller than the {window_size}px window")
    kern = _gaussian_kernel(window_size, sigma)
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    vals = []
    for ch in range(a.shape[2]):
        x, y = a[:, :, ch], b[:, :, ch]
        mu_x = _filter_valid(x, kern)
        mu_y = _filter_valid(y, kern)
        sxx = _filter_valid(x * x, kern) - mu_x ** 2
        syy = _filter_valid(y * y, kern) - mu_y ** 2
        sxy = _filter_valid(x * y, kern) - mu_x * mu_y
        num = (2 * mu_x * mu_y + c1) * (2 * sxy + c2)
        den = (mu_x ** 2 + mu_y ** 2 + c1) * (sxx + syy + c2)
        vals.append(float(np.mean(num / den)))
    return float(np.mean(vals))


def lr_psnr(sr, hr, lr_h, lr_w, kernel=BicubicKernel(), **metric_flags):
    """PSNR between bicubic-downsampled SR and bicubic-downsampled ground truth."""
    sr = np.asarray(sr, dtype=np.float64)
    hr = np.asarray(hr, dtype=np.float64)
    if sr.shape != hr.shape:
        raise ValueError(f"lr_psnr inputs differ in shape: {sr.shape} vs {hr.shape}")
    sr_lr = bicubic_resize(sr.transpose(2, 0, 1), lr_h, lr_w, kernel).transpose(1, 2, 0)
    hr_lr = bicubic_resize(hr.transpose(2, 0, 1), lr_h, lr_w, kernel).transpose(1, 2, 0)
    return psnr(sr_lr, hr_lr, **metric_flags)


def evaluate_pair(sr, hr, lr_h, lr_w, kernel=BicubicKernel(), channels="rgb",
                  border_crop=0, on_8bit=False):
    flags = {"channels": channels, "border_crop": border_crop, "on_8bit": on_8bit,
             "antialias": kernel.antialias}
    return MetricReport(
        psnr_db=psnr(sr, hr, channels=channels, border_crop=border_crop, on_8bit=on_8bit),
        ssim=ssim(sr, hr, channels=channels, border_crop=border_crop, on_8bit=on_8bit),
        lr_psnr_db=lr_psnr(sr, hr, lr_h, lr_w, kernel, channels=channels,
                           border_crop=border_crop, on_8bit=on_8bit),
        flags=flags,
    )
