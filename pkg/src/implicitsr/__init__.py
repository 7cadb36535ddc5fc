"""Arbitrary-scale single-image super-resolution.

An encoder turns the low-resolution image into a deep feature map; a
dual-branch implicit decoder (ReLU modulation over content features, sine
synthesis over per-pixel local coordinates) predicts the signal at every
pixel center of any requested output grid, so one trained model serves all
real-valued scale factors. Everything runs on a minimal reverse-mode
tensor core; no deep-learning framework is involved.
"""

from .decoder import DecoderConfig, M_ONLY, M_Z, S_Z, param_count
from .encoder import EncoderConfig
from .estimator import NotFittedError, SuperResolver
from .metrics import MetricReport, lr_psnr, psnr, ssim
from .model import (CheckpointError, ModelConfig, SRModel, load_checkpoint,
                    save_checkpoint)
from .resample import BicubicKernel, bicubic_resize, nearest_upsample

__version__ = "0.1.0"

__all__ = [
    "BicubicKernel", "CheckpointError", "DecoderConfig", "EncoderConfig",
    "M_ONLY", "M_Z", "MetricReport", "ModelConfig", "NotFittedError",
    "S_Z", "SRModel", "SuperResolver", "bicubic_resize", "load_checkpoint",
    "lr_psnr", "nearest_upsample", "param_count", "psnr", "save_checkpoint",
    "ssim", "__version__",
]
