"""Differentiable primitives: convolution, dense, activations, loss.

Shape convention for spatial ops is channels-first [B, C, H, W]. All ops
have full reverse-mode support; forward math runs in the input dtype
(float32 normally, float64 under gradient checking).
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import Tensor, from_op


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def relu(x):
    x = _as_tensor(x)
    d = x.data
    out = np.maximum(d, 0)

    def bwd(g):
        return ((d > 0).astype(d.dtype) * g,)

    return from_op(out, (x,), bwd)


def sin(x):
    x = _as_tensor(x)
    d = x.data
    out = np.sin(d)

    def bwd(g):
        return (np.cos(d) * g,)

    return from_op(out, (x,), bwd)


def add(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape != b.shape:
        raise ValueError(f"add: shape mismatch {a.shape} vs {b.shape}")

    def bwd(g):
        return (g, g)

    return from_op(a.data + b.data, (a, b), bwd)


def hadamard(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape != b.shape:
        raise ValueError(f"hadamard: shape mismatch {a.shape} vs {b.shape}")
    da, db = a.data, b.data

    def bwd(g):
        return (db * g, da * g)

    return from_op(da * db, (a, b), bwd)


def scale(x, alpha):
    """Multiply by a python scalar (used for activation frequency and loss weighting)."""
    x = _as_tensor(x)
    alpha = float(alpha)

    def bwd(g):
        return (alpha * g,)

    return from_op(x.data * alpha, (x,), bwd)


def concat_channels(tensors):
    tensors = [_as_tensor(t) for t in tensors]
    if not tensors:
        raise ValueError("concat_channels: empty input list")
    base = tensors[0].shape
    for t in tensors[1:]:
        if t.ndim != len(base) or t.shape[0] != base[0] or t.shape[2:] != base[2:]:
            raise ValueError(
                f"concat_channels: non-channel dims differ: {base} vs {t.shape}"
            )
    widths = [t.shape[1] for t in tensors]
    edges = np.cumsum([0] + widths)

    def bwd(g):
        return tuple(g[:, edges[i]:edges[i + 1]] for i in range(len(tensors)))

    return from_op(np.concatenate([t.data for t in tensors], axis=1), tuple(tensors), bwd)


def slice_channels(x, start, stop):
    x = _as_tensor(x)
    if not (0 <= start <= stop <= x.shape[1]):
        raise ValueError(f"slice_channels: [{start}:{stop}] out of range for C={x.shape[1]}")

    def bwd(g):
        full = np.zeros_like(x.data)
        full[:, start:stop] = g
        return (full,)

    return from_op(x.data[:, start:stop].copy(), (x,), bwd)


def _im2col(xp, kh, kw):
    # xp: padded input [B, C, Hp, Wp] -> [B, H'*W', C*kh*kw]
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))  # [B,C,H',W',kh,kw]
    b, c, ho, wo = win.shape[:4]
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(b, ho * wo, c * kh * kw)
    return np.ascontiguousarray(cols), ho, wo


def conv2d(x, weight, bias, padding=0):
    """2-D cross-correlation with zero padding.

    x: [B, C, H, W], weight: [O, C, kh, kw], bias: [O].
    Output spatial size is H + 2*padding - kh + 1 (same for W).
    """
    x, weight, bias = _as_tensor(x), _as_tensor(weight), _as_tensor(bias)
    if x.ndim != 4 or weight.ndim != 4:
        raise ValueError(f"conv2d: need 4-d input/weight, got {x.shape}, {weight.shape}")
    o, c, kh, kw = weight.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise ValueError(f"conv2d: kernel dims must be odd, got {kh}x{kw}")
    if padding < 0:
        raise ValueError(f"conv2d: padding must be >= 0, got {padding}")
    if x.shape[1] != c:
        raise ValueError(f"conv2d: input has {x.shape[1]} channels, weight expects {c}")
    if bias.shape != (o,):
        raise ValueError(f"conv2d: bias shape {bias.shape} != ({o},)")
    b, _, h, w = x.shape
    if h + 2 * padding < kh or w + 2 * padding < kw:
        raise ValueError("conv2d: kernel larger than padded input")

    p = padding
    xp = np.pad(x.data, ((0, 0), (0, 0), (p, p), (p, p))) if p else x.data
    cols, ho, wo = _im2col(xp, kh, kw)
    wmat = weight.data.reshape(o, c * kh * kw)
    out = cols @ wmat.T + bias.data  # [B, H'W', O]
    out = out.transpose(0, 2, 1).reshape(b, o, ho, wo)

    def bwd(g):
        gmat = g.reshape(b, o, ho * wo).transpose(0, 2, 1)  # [B, H'W', O]
        gb = g.sum(axis=(0, 2, 3))
        gw = np.tensordot(gmat, cols, axes=([0, 1], [0, 1])).reshape(o, c, kh, kw)
        gcols = gmat @ wmat  # [B, H'W', C*kh*kw]
        gcols = gcols.reshape(b, ho, wo, c, kh, kw)
        gxp = np.zeros_like(xp)
        for i in range(kh):
            for j in range(kw):
                gxp[:, :, i:i + ho, j:j + wo] += gcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        gx = gxp[:, :, p:p + h, p:p + w] if p else gxp
        return gx, gw, gb

    return from_op(out, (x, weight, bias), bwd)


def dense(x, weight, bias):
    """Affine map over the trailing axis: [..., Cin] -> [..., Cout]."""
    x, weight, bias = _as_tensor(x), _as_tensor(weight), _as_tensor(bias)
    co, ci = weight.shape
    if x.shape[-1] != ci:
        raise ValueError(f"dense: input width {x.shape[-1]} != weight in-width {ci}")
    if bias.shape != (co,):
        raise ValueError(f"dense: bias shape {bias.shape} != ({co},)")
    xd = x.data

    def bwd(g):
        gx = g @ weight.data
        gw = g.reshape(-1, co).T @ xd.reshape(-1, ci)
        gb = g.reshape(-1, co).sum(axis=0)
        return gx, gw, gb

    return from_op(xd @ weight.data.T + bias.data, (x, weight, bias), bwd)


def l1_loss(pred, target):
    """Mean absolute difference; subgradient 0 at exact ties."""
    pred, target = _as_tensor(pred), _as_tensor(target)
    if pred.shape != target.shape:
        raise ValueError(f"l1_loss: shape mismatch {pred.shape} vs {target.shape}")
    diff = pred.data - target.data
    n = diff.size

    def bwd(g):
        s = np.sign(diff) * (g / n)
        return s, -s

    return from_op(np.abs(diff).mean(), (pred, target), bwd)
