"""End-to-end model: encode -> unfold -> nearest-upsample -> decode.

The decoder consumes the unfolded feature map, so its input width is
always 9 x encoder.feat_channels. Scale is derived from the requested
output size (s = out / in per axis), never passed separately, which keeps
non-integer scales unambiguous.

Checkpoints are a self-describing binary format: magic, format version, a
canonical JSON header (config, tensor manifest, metadata), then raw
little-endian float32 buffers. save(load(save(x))) is bitwise identical.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass

import numpy as np

from . import coords
from .decoder import DecoderConfig, decode, init_decoder_params, param_count
from .encoder import EncoderConfig, encode, init_encoder_params, unfold3
from .imageio import to_chw, to_hwc
from .numcore.tensor import Tensor, no_grad
from .resample import nearest_upsample

CHECKPOINT_MAGIC = b"ISRCKPT\x00"
CHECKPOINT_VERSION = 1


class CheckpointError(Exception):
    """Unreadable, corrupt, or schema-inconsistent checkpoint file."""


@dataclass(frozen=True)
class ModelConfig:
    encoder: EncoderConfig = EncoderConfig()
    decoder: DecoderConfig = DecoderConfig()
    seed: int = 0

    @property
    def cz(self):
        return 9 * self.encoder.feat_channels

    def to_dict(self):
        return {"encoder": asdict(self.encoder), "decoder": asdict(self.decoder),
                "seed": self.seed}

    @classmethod
    def from_dict(cls, d):
        return cls(encoder=EncoderConfig(**d["encoder"]),
                   decoder=DecoderConfig(**d["decoder"]), seed=int(d["seed"]))


class SRModel:
    """Parameter container plus the forward pipeline."""

    def __init__(self, config, params):
        self.config = config
        self.params = params  # name -> Tensor, iteration order = sorted(name)

    @classmethod
    def build(cls, config, dtype=np.float32):
        config.encoder.validate()
        config.decoder.validate()
        params = {}
        params.update(init_encoder_params(config.encoder, config.seed, dtype=dtype))
        params.update(init_decoder_params(config.decoder, config.cz, config.seed, dtype=dtype))
        return cls(config, dict(sorted(params.items())))

    def parameters(self):
        return list(self.params.values())

    def named_parameters(self):
        return list(self.params.items())

    def total_params(self):
        return sum(p.size for p in self.parameters())

    def forward_grid(self, lr, out_h, out_w):
        """Differentiable path: [B, 3, h, w] Tensor -> [B, 3, out_h, out_w] Tensor."""
        b, _, h, w = lr.shape
        feat = unfold3(encode(lr, self.params, self.config.encoder))
        z = nearest_upsample(feat, out_h, out_w)
        grid = coords.make_grid(h, w, out_h, out_w)
        p = coords.make_positional(grid, h, w, out_h, out_w, batch=b,
                                   dtype=lr.dtype.type)
        return decode(z, p, self.params, self.config.decoder)

    def super_resolve(self, lr_img, out_h, out_w):
        """H x W x 3 image in [0,1] -> out_h x out_w x 3 image, clamped to [0,1]."""
        lr_img = np.asarray(lr_img, dtype=np.float32)
        if lr_img.ndim != 3 or lr_img.shape[2] != 3:
            raise ValueError(f"super_resolve: expected HxWx3 input, got {lr_img.shape}")
        h, w = lr_img.shape[:2]
        if out_h < h or out_w < w:
            raise ValueError(
                f"super_resolve: target {out_h}x{out_w} below input {h}x{w}; "
                "use bicubic_resize for downscaling")
        with no_grad():
            lr = Tensor(to_chw(lr_img)[None])
            sr = self.forward_grid(lr, out_h, out_w)
        return np.clip(to_hwc(sr.data[0]), 0.0, 1.0)


def model_param_count(config):
    from .encoder import encoder_param_count
    return encoder_param_count(config.encoder) + param_count(config.decoder, config.cz)


def _canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def expected_shapes(config):
    from .decoder import _param_shapes as dec_shapes
    from .encoder import _conv_param_shapes as enc_shapes
    shapes = {}
    shapes.update(enc_shapes(config.encoder))
    shapes.update(dec_shapes(config.decoder, config.cz))
    return shapes


def save_checkpoint(model, path, optimizer=None, metadata=None):
    """Write model (and optionally Adam state) to ``path``.

    ``optimizer`` is a dict {"t": int, "m": {name: array}, "v": {name: array}}.
    """
    tensors = [(name, np.ascontiguousarray(p.data, dtype="<f4"))
               for name, p in sorted(model.params.items())]
    if optimizer is not None:
        for kind in ("m", "v"):
            for name, arr in sorted(optimizer[kind].items()):
                tensors.append((f"opt.{kind}.{name}",
                                np.ascontiguousarray(arr, dtype="<f4")))
    manifest = []
    offset = 0
    for name, arr in tensors:
        manifest.append({"name": name, "shape": list(arr.shape),
                         "dtype": "<f4", "offset": offset})
        offset += arr.nbytes
    meta = dict(metadata or {})
    if optimizer is not None:
        meta["opt_step"] = int(optimizer["t"])
    header = _canonical_json({
        "config": model.config.to_dict(),
        "tensors": manifest,
        "metadata": meta,
    })
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", CHECKPOINT_VERSION))
        f.write(struct.pack("<Q", len(header)))
        f.write(header)
        for _, arr in tensors:
            f.write(arr.tobytes())


def load_checkpoint(path):
    """Read a checkpoint; returns (model, optimizer-or-None, metadata)."""
    with open(path, "rb") as f:
        blob = f.read()
    pos = len(CHECKPOINT_MAGIC)
    if blob[:pos] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: bad magic, not a checkpoint")
    if len(blob) < pos + 12:
        raise CheckpointError(f"{path}: truncated header")
    (version,) = struct.unpack_from("<I", blob, pos)
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"{path}: format version {version}, expected {CHECKPOINT_VERSION}")
    (header_len,) = struct.unpack_from("<Q", blob, pos + 4)
    header_start = pos + 12
    if len(blob) < header_start + header_len:
        raise CheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(blob[header_start:header_start + header_len])
        config = ModelConfig.from_dict(header["config"])
        manifest = header["tensors"]
        metadata = header["metadata"]
    except (ValueError, KeyError, TypeError) as e:
        raise CheckpointError(f"{path}: unreadable header ({e})") from e

    payload = blob[header_start + header_len:]
    shapes = expected_shapes(config)
    params = {}
    opt = {"m": {}, "v": {}}
    for entry in manifest:
        name, shape = entry["name"], tuple(entry["shape"])
        nbytes = int(np.prod(shape)) * 4
        start = entry["offset"]
        if start + nbytes > len(payload):
            raise CheckpointError(f"{path}: truncated payload at tensor {name!r}")
        arr = np.frombuffer(payload[start:start + nbytes], dtype="<f4").reshape(shape)
        if name.startswith("opt."):
            kind, pname = name.split(".", 2)[1:]
            if pname not in shapes or shapes[pname] != shape:
                raise CheckpointError(
                    f"{path}: tensor {name!r} has shape {shape}, config expects "
                    f"{shapes.get(pname)}")
            opt[kind][pname] = arr.copy()
        else:
            if name not in shapes:
                raise CheckpointError(f"{path}: unexpected tensor {name!r}")
            if shapes[name] != shape:
                raise CheckpointError(
                    f"{path}: tensor {name!r} has shape {shape}, config expects "
                    f"{shapes[name]}")
            params[name] = Tensor(arr.copy(), requires_grad=True)
    missing = sorted(set(shapes) - set(params))
    if missing:
        raise CheckpointError(f"{path}: missing tensors {missing}")
    model = SRModel(config, dict(sorted(params.items())))
    optimizer = None
    if opt["m"]:
        optimizer = {"t": int(metadata.get("opt_step", 0)), "m": opt["m"], "v": opt["v"]}
    return model, optimizer, metadata
