"""Content-feature encoder.

A plain residual convolutional stack that preserves spatial size:
3x3 conv in, ``num_blocks`` residual blocks (conv-relu-conv plus skip),
3x3 conv out. Depth and width are configurable; the decoder only relies
on the interface (same spatial size, ``feat_channels`` channels).

``unfold3`` concatenates each pixel's 3x3 feature neighborhood, turning
F channels into 9F. Out-of-image neighbors contribute zeros.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numcore import ops
from .numcore.rng import named_stream
from .numcore.tensor import Tensor, from_op


@dataclass(frozen=True)
class EncoderConfig:
    feat_channels: int = 64
    num_blocks: int = 3
    in_channels: int = 3
    kernel: int = 3

    def validate(self):
        if self.feat_channels < 1:
            raise ValueError("feat_channels must be >= 1")
        if self.num_blocks < 0:
            raise ValueError("num_blocks must be >= 0")


def _conv_param_shapes(cfg):
    f, c, k = cfg.feat_channels, cfg.in_channels, cfg.kernel
    shapes = {"encoder.head.w": (f, c, k, k), "encoder.head.b": (f,)}
    for i in range(cfg.num_blocks):
        shapes[f"encoder.block{i}.conv1.w"] = (f, f, k, k)
        shapes[f"encoder.block{i}.conv1.b"] = (f,)
        shapes[f"encoder.block{i}.conv2.w"] = (f, f, k, k)
        shapes[f"encoder.block{i}.conv2.b"] = (f,)
    shapes["encoder.tail.w"] = (f, f, k, k)
    shapes["encoder.tail.b"] = (f,)
    return shapes


def init_encoder_params(cfg, seed, dtype=np.float32):
    """Centered-uniform init with bound 1/sqrt(fan_in), one PRNG stream per tensor."""
    cfg.validate()
    params = {}
    for name, shape in _conv_param_shapes(cfg).items():
        if name.endswith(".w"):
            bound = 1.0 / np.sqrt(int(np.prod(shape[1:])))
            data = named_stream(seed, name).uniform(-bound, bound, size=shape)
        else:
            data = np.zeros(shape)
        params[name] = Tensor(data, requires_grad=True, dtype=dtype)
    return params


def encoder_param_count(cfg):
    return sum(int(np.prod(s)) for s in _conv_param_shapes(cfg).values())


def encode(img, params, cfg, relu_preacts=None):
    """[B, 3, h, w] image in [0,1] -> [B, F, h, w] feature map, same spatial size.

    ``relu_preacts``, when a list, collects each pre-ReLU tensor (used by the
    gradient-check harness to verify kink margins).
    """
    pad = (cfg.kernel - 1) // 2
    x = ops.conv2d(img, params["encoder.head.w"], params["encoder.head.b"], padding=pad)
    for i in range(cfg.num_blocks):
        t = ops.conv2d(x, params[f"encoder.block{i}.conv1.w"],
                       params[f"encoder.block{i}.conv1.b"], padding=pad)
        if relu_preacts is not None:
            relu_preacts.append(t)
        t = ops.relu(t)
        t = ops.conv2d(t, params[f"encoder.block{i}.conv2.w"],
                       params[f"encoder.block{i}.conv2.b"], padding=pad)
        x = ops.add(x, t)
    return ops.conv2d(x, params["encoder.tail.w"], params["encoder.tail.b"], padding=pad)


def unfold3(feat):
    """[B, F, h, w] -> [B, 9F, h, w]; block k holds neighbor (k//3-1, k%3-1)."""
    if not isinstance(feat, Tensor):
        feat = Tensor(feat)
    b, f, h, w = feat.shape
    padded = np.pad(feat.data, ((0, 0), (0, 0), (1, 1), (1, 1)))
    blocks = [padded[:, :, dy:dy + h, dx:dx + w]
              for dy in range(3) for dx in range(3)]
    out = np.concatenate(blocks, axis=1)

    def bwd(g):
        gp = np.zeros_like(padded)
        for k in range(9):
            dy, dx = divmod(k, 3)
            gp[:, :, dy:dy + h, dx:dx + w] += g[:, k * f:(k + 1) * f]
        return (gp[:, :, 1:1 + h, 1:1 + w],)

    return from_op(out, (feat,), bwd)
