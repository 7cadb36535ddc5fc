"""Benchmark-style evaluation: degrade, super-resolve, score.

Protocol per image and scale s: for integer s the HR image is first cropped
to dimensions divisible by s (the standard benchmark convention); for real
s the LR size is floor(HR/s). The LR input is the bicubic downsample of the
(cropped) HR, the SR output is produced at exactly the HR size, and
PSNR/SSIM/LR-PSNR are computed on the float images.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .imageio import to_chw, to_hwc
from .metrics import evaluate_pair
from .resample import BicubicKernel, bicubic_resize


@dataclass
class EvalRow:
    scale: float
    image: str
    psnr_db: float
    ssim: float
    lr_psnr_db: float


def degrade(hr, s, kernel):
    """HR (HWC) -> (cropped HR, LR) for scale s."""
    h, w = hr.shape[:2]
    if float(s).is_integer():
        s_int = int(s)
        hr = hr[:h - h % s_int if h % s_int else h, :w - w % s_int if w % s_int else w]
        h, w = hr.shape[:2]
        lr_h, lr_w = h // s_int, w // s_int
    else:
        lr_h, lr_w = max(1, math.floor(h / s)), max(1, math.floor(w / s))
    lr = bicubic_resize(to_chw(hr), lr_h, lr_w, kernel)
    return hr, np.clip(to_hwc(lr), 0.0, 1.0)


def sr_bicubic(lr, out_h, out_w, kernel):
    up = bicubic_resize(to_chw(lr), out_h, out_w, kernel)
    return np.clip(to_hwc(up), 0.0, 1.0)


def evaluate_dataset(dataset, scales, method="bicubic", model=None,
                     antialias=True, channels="rgb", border_crop=0,
                     on_8bit=False):
    """Per-image rows plus per-scale mean rows (image name 'MEAN')."""
    if method == "model" and model is None:
        raise ValueError("method 'model' needs a model")
    kernel = BicubicKernel(antialias=antialias)
    rows = []
    for s in scales:
        per_scale = []
        for i in range(len(dataset)):
            hr = dataset.load(i)
            hr_c, lr = degrade(hr, s, kernel)
            out_h, out_w = hr_c.shape[:2]
            if method == "bicubic":
                sr = sr_bicubic(lr, out_h, out_w, kernel)
            else:
                sr = model.super_resolve(lr, out_h, out_w)
            rep = evaluate_pair(sr, hr_c, lr.shape[0], lr.shape[1], kernel,
                                channels=channels, border_crop=border_crop,
                                on_8bit=on_8bit)
            row = EvalRow(float(s), dataset.name(i), rep.psnr_db, rep.ssim,
                          rep.lr_psnr_db)
            per_scale.append(row)
            rows.append(row)
        rows.append(EvalRow(
            float(s), "MEAN",
            float(np.mean([min(r.psnr_db, 100.0) for r in per_scale])),
            float(np.mean([r.ssim for r in per_scale])),
            float(np.mean([min(r.lr_psnr_db, 100.0) for r in per_scale])),
        ))
    return rows


def format_db(x):
    return "inf" if math.isinf(x) else f"{x:.4f}"


def rows_to_csv(rows):
    lines = ["scale,image,psnr_db,ssim,lr_psnr_db"]
    for r in rows:
        lines.append(f"{r.scale:g},{r.image},{format_db(r.psnr_db)},"
                     f"{r.ssim:.6f},{format_db(r.lr_psnr_db)}")
    return "\n".join(lines) + "\n"


def summary_table(rows, title):
    means = [r for r in rows if r.image == "MEAN"]
    out = [title, f"{'scale':>8} {'PSNR(dB)':>10} {'SSIM':>8} {'LR-PSNR(dB)':>12}"]
    for r in means:
        out.append(f"{r.scale:>8g} {min(r.psnr_db, 100.0):>10.2f} "
                   f"{r.ssim:>8.4f} {min(r.lr_psnr_db, 100.0):>12.2f}")
    return "\n".join(out)
