"""Dual-branch implicit decoder.

Two stacks of 1x1 convolutions run side by side over the query grid: a
ReLU *modulation* branch driven by content features z, and a sine
*synthesis* branch driven by positional features p. Layer by layer the
modulation output gates the synthesis output elementwise:

    m_0 = relu(W_0 z + b_0)
    s_0 = m_0 * sin(W'_0 p + b'_0)
    m_i = relu(W_i [x_{i-1}; z] + b_i)      x = s (default), m, or nothing
    s_i = m_i * sin(W'_i s_{i-1} + b'_i)

and the last synthesis output goes through a final 1x1 projection with no
activation. ``mode`` selects what later modulation layers consume:
``s_z`` concatenates the previous synthesis output with z, ``m_z`` the
previous modulation output with z, ``m_only`` drops the z feed entirely.
``s_z`` and ``m_z`` have identical parameter counts since both concatenate
a hidden-width activation with z.

Optionally an initializing sine layer lifts p to the width of z and gates
z with it (a learnable distance weighting over the unfolded neighborhood):

    p <- sin(W p + b)      (output width = Cz)
    z <- p * z

Sine layers follow the established sinusoidal-network recipe: the forward
pass scales pre-activations by omega0 (default 30); first-layer weights
are uniform in +/-1/fan_in, later sine layers uniform in
+/-sqrt(6/fan_in)/omega0. ReLU and projection layers use the standard
+/-1/sqrt(fan_in) uniform init.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numcore import ops
from .numcore.rng import named_stream
from .numcore.tensor import Tensor

M_ONLY = "m_only"
M_Z = "m_z"
S_Z = "s_z"
MODES = (M_ONLY, M_Z, S_Z)


@dataclass(frozen=True)
class DecoderConfig:
    num_layers: int = 4
    hidden: int = 256
    mode: str = S_Z
    init_positional: bool = False
    omega0: float = 30.0
    out_channels: int = 3

    def validate(self):
        if self.num_layers < 1:
            raise ValueError("num_layers must be >= 1")
        if self.hidden < 1:
            raise ValueError("hidden must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass
class DecoderState:
    """Intermediate activations of one forward pass, layer by layer."""

    m: list = field(default_factory=list)          # post-ReLU modulation activations
    s: list = field(default_factory=list)          # post-gating synthesis activations
    sine: list = field(default_factory=list)       # pre-gating sin outputs, in [-1, 1]
    mod_pre: list = field(default_factory=list)    # pre-ReLU modulation values


def _mod_in_width(cfg, cz, layer):
    if layer == 0:
        return cz
    return cfg.hidden if cfg.mode == M_ONLY else cfg.hidden + cz


def _syn_in_width(cfg, cz, layer):
    if layer == 0:
        return cz if cfg.init_positional else 3
    return cfg.hidden


def _param_shapes(cfg, cz):
    h = cfg.hidden
    shapes = {}
    if cfg.init_positional:
        shapes["decoder.ip.w"] = (cz, 3, 1, 1)
        shapes["decoder.ip.b"] = (cz,)
    for i in range(cfg.num_layers):
        shapes[f"decoder.mod{i}.w"] = (h, _mod_in_width(cfg, cz, i), 1, 1)
        shapes[f"decoder.mod{i}.b"] = (h,)
        shapes[f"decoder.syn{i}.w"] = (h, _syn_in_width(cfg, cz, i), 1, 1)
        shapes[f"decoder.syn{i}.b"] = (h,)
    shapes["decoder.final.w"] = (cfg.out_channels, h, 1, 1)
    shapes["decoder.final.b"] = (cfg.out_channels,)
    return shapes


def param_count(cfg, cz):
    """Exact trainable-scalar count of the decoder for feature width cz."""
    cfg.validate()
    return sum(int(np.prod(s)) for s in _param_shapes(cfg, cz).values())


def init_decoder_params(cfg, cz, seed, dtype=np.float32):
    cfg.validate()
    params = {}
    for name, shape in _param_shapes(cfg, cz).items():
        rng = named_stream(seed, name)
        if name.endswith(".b"):
            data = np.zeros(shape)
            if ".syn" in name or ".ip." in name:
                # sine-layer biases keep the standard uniform init
                bound = 1.0 / np.sqrt(_syn_fan_in(cfg, cz, name))
                data = rng.uniform(-bound, bound, size=shape)
        else:
            fan_in = int(np.prod(shape[1:]))
            if name == "decoder.ip.w" or (name == "decoder.syn0.w" and not cfg.init_positional):
                bound = 1.0 / fan_in          # first sine layer sees raw coordinates
            elif ".syn" in name:
                bound = np.sqrt(6.0 / fan_in) / cfg.omega0
            else:
                bound = 1.0 / np.sqrt(fan_in)
            data = rng.uniform(-bound, bound, size=shape)
        params[name] = Tensor(data, requires_grad=True, dtype=dtype)
    return params


def _syn_fan_in(cfg, cz, bias_name):
    if ".ip." in bias_name:
        return 3
    layer = int(bias_name.split("syn")[1].split(".")[0])
    return _syn_in_width(cfg, cz, layer)


def _sine_layer(x, w, b, omega0):
    return ops.sin(ops.scale(ops.conv2d(x, w, b, padding=0), omega0))


def init_positional(p, z, params, omega0=30.0):
    """Lift p to z's width through a sine layer, then gate z: returns (p', z')."""
    p2 = _sine_layer(p, params["decoder.ip.w"], params["decoder.ip.b"], omega0)
    return p2, ops.hadamard(p2, z)


def decode_with_state(z, p, params, cfg):
    cfg.validate()
    if z.shape[0] != p.shape[0] or z.shape[2:] != p.shape[2:]:
        raise ValueError(f"decode: z {z.shape} and p {p.shape} disagree")
    if p.shape[1] != 3:
        raise ValueError(f"decode: p must have 3 channels, got {p.shape[1]}")
    if cfg.init_positional:
        p, z = init_positional(p, z, params, cfg.omega0)
    state = DecoderState()
    m = s = None
    for i in range(cfg.num_layers):
        if i == 0:
            mod_in = z
        elif cfg.mode == M_ONLY:
            mod_in = m
        elif cfg.mode == M_Z:
            mod_in = ops.concat_channels([m, z])
        else:
            mod_in = ops.concat_channels([s, z])
        pre = ops.conv2d(mod_in, params[f"decoder.mod{i}.w"],
                         params[f"decoder.mod{i}.b"], padding=0)
        m = ops.relu(pre)
        state.mod_pre.append(pre)
        syn_in = p if i == 0 else s
        wave = _sine_layer(syn_in, params[f"decoder.syn{i}.w"],
                           params[f"decoder.syn{i}.b"], cfg.omega0)
        s = ops.hadamard(m, wave)
        state.m.append(m)
        state.sine.append(wave)
        state.s.append(s)
    out = ops.conv2d(s, params["decoder.final.w"], params["decoder.final.b"], padding=0)
    return out, state


def decode(z, p, params, cfg):
    """[B, Cz, H, W] content + [B, 3, H, W] positional -> [B, 3, H, W] signal."""
    out, _ = decode_with_state(z, p, params, cfg)
    return out
