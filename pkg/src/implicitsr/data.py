"""Dataset folders, the patch sampler, and the training loop.

A training example is built per (HR image, scale): crop a random square of
side ``patch_base * s`` (falling back to the largest multiple of s that fits
when the image is small), apply horizontal/vertical/transpose flips each
with probability ``flip_prob``, then bicubic-downsample the HR patch to the
LR side. Flips commute with the separable downsampling kernel, so applying
them HR-side is equivalent to LR-side; this implementation flips the HR
patch before degrading.

Batch content is a pure function of (seed, epoch, step): every draw comes
from a stream named after those coordinates, never from shared mutable RNG
state.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .imageio import IMAGE_EXTENSIONS, load_image, to_chw
from .model import save_checkpoint
from .numcore import l1_loss
from .numcore.adam import AdamState, adam_step
from .numcore.ops import add as ops_add
from .numcore.ops import scale as ops_scale
from .numcore.rng import named_stream
from .numcore.tensor import Tensor, backward
from .resample import BicubicKernel, bicubic_resize


class DatasetFolder:
    """Directory of 8-bit RGB images, listed in stable lexicographic order."""

    def __init__(self, root):
        self.root = str(root)
        if not os.path.isdir(self.root):
            raise FileNotFoundError(f"dataset directory not found: {self.root}")
        self.paths = sorted(
            os.path.join(self.root, f) for f in os.listdir(self.root)
            if f.lower().endswith(IMAGE_EXTENSIONS)
        )
        if not self.paths:
            raise ValueError(f"no {'/'.join(IMAGE_EXTENSIONS)} images in {self.root}")

    def __len__(self):
        return len(self.paths)

    def name(self, i):
        return os.path.basename(self.paths[i])

    def load(self, i):
        return load_image(self.paths[i])


class ArrayDataset:
    """In-memory stand-in for DatasetFolder (used by the estimator API)."""

    def __init__(self, images):
        self.images = [np.asarray(im, dtype=np.float32) for im in images]
        if not self.images:
            raise ValueError("empty image list")

    def __len__(self):
        return len(self.images)

    def name(self, i):
        return f"array{i}"

    def load(self, i):
        return self.images[i]


@dataclass
class TrainConfig:
    scales: tuple = (2, 3, 4)
    patch_base: int = 48
    batch_hr: int = 4
    epochs: int = 10
    lr0: float = 1e-4
    halve_every: int = 200
    flip_prob: float = 0.5
    seed: int = 0
    antialias: bool = True


def learning_rate(cfg, epoch):
    return cfg.lr0 * 0.5 ** (epoch // cfg.halve_every)


def _crop_and_flip(img, s, cfg, rng):
    h, w = img.shape[:2]
    side = cfg.patch_base * s
    feasible = (min(h, w) // s) * s
    if feasible < s:
        raise ValueError(f"image {h}x{w} too small for scale {s}")
    side = min(side, feasible)
    y = int(rng.integers(0, h - side + 1))
    x = int(rng.integers(0, w - side + 1))
    patch = img[y:y + side, x:x + side]
    if rng.random() < cfg.flip_prob:
        patch = patch[:, ::-1]
    if rng.random() < cfg.flip_prob:
        patch = patch[::-1, :]
    if rng.random() < cfg.flip_prob:
        patch = np.transpose(patch, (1, 0, 2))
    return np.ascontiguousarray(patch)


def sample_batch(dataset, cfg, rng, indices=None):
    """List of (lr_chw, hr_chw, scale) float32 pairs: len(indices) x len(scales)."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    if indices is None:
        indices = rng.integers(0, len(dataset), size=cfg.batch_hr)
    kernel = BicubicKernel(antialias=cfg.antialias)
    batch = []
    for idx in indices:
        img = dataset.load(int(idx))
        for s in cfg.scales:
            hr = to_chw(_crop_and_flip(img, s, cfg, rng))
            lr_side = hr.shape[1] // s
            lr = bicubic_resize(hr, lr_side, lr_side, kernel)
            batch.append((lr, hr, s))
    return batch


@dataclass
class TrainResult:
    epoch_losses: list = field(default_factory=list)
    log_rows: list = field(default_factory=list)    # (epoch, step, loss, lr)
    best_epoch: int = -1
    global_step: int = 0


def _loss_over_batch(model, batch):
    # one forward per scale group (HR sizes differ across scales)
    groups = {}
    for lr, hr, s in batch:
        groups.setdefault((s, hr.shape[1], hr.shape[2]), []).append((lr, hr))
    total = None
    for (s, out_h, out_w), pairs in sorted(groups.items()):
        lr_stack = Tensor(np.stack([p[0] for p in pairs]))
        hr_stack = Tensor(np.stack([p[1] for p in pairs]))
        pred = model.forward_grid(lr_stack, out_h, out_w)
        part = l1_loss(pred, hr_stack)
        total = part if total is None else ops_add(total, part)
    return ops_scale(total, 1.0 / len(groups))


def train(model, dataset, cfg, out_dir=None, optimizer=None, start_epoch=0,
          log_fn=None):
    """Adam training with the halving LR schedule; returns a TrainResult.

    Saves ``ckpt_last`` each epoch end and ``ckpt_best`` at the best epoch-mean
    loss when ``out_dir`` is given. A non-finite loss aborts with a diagnostic;
    the last epoch-end checkpoint stays on disk.
    """
    params = model.parameters()
    names = [n for n, _ in model.named_parameters()]
    if optimizer is None:
        optimizer = AdamState(params)
    result = TrainResult(global_step=optimizer.t)
    steps_per_epoch = max(1, math.ceil(len(dataset) / cfg.batch_hr))
    best = math.inf
    loss_path = os.path.join(out_dir, "loss_log.csv") if out_dir else None
    if loss_path and not os.path.exists(loss_path):
        with open(loss_path, "w", newline="") as f:
            csv.writer(f).writerow(["epoch", "step", "loss", "lr"])

    for epoch in range(start_epoch, start_epoch + cfg.epochs):
        order = named_stream(cfg.seed, f"shuffle.epoch{epoch}").permutation(len(dataset))
        lr_now = learning_rate(cfg, epoch)
        epoch_losses = []
        for step in range(steps_per_epoch):
            chunk = order[step * cfg.batch_hr:(step + 1) * cfg.batch_hr]
            if chunk.size == 0:
                break
            rng = named_stream(cfg.seed, f"batch.epoch{epoch}.step{step}")
            batch = sample_batch(dataset, cfg, rng, indices=chunk)
            loss = _loss_over_batch(model, batch)
            value = loss.item()
            if not math.isfinite(value):
                raise RuntimeError(
                    f"non-finite loss at epoch {epoch} step {step}; "
                    f"last good checkpoint is from epoch {epoch - 1}")
            for p in params:
                p.grad = None
            backward(loss)
            adam_step(params, [p.grad for p in params], optimizer, lr_now)
            epoch_losses.append(value)
            result.log_rows.append((epoch, step, value, lr_now))
            result.global_step = optimizer.t
        mean_loss = float(np.mean(epoch_losses))
        result.epoch_losses.append(mean_loss)
        if log_fn:
            log_fn(epoch, mean_loss, lr_now)
        if loss_path:
            with open(loss_path, "a", newline="") as f:
                w = csv.writer(f)
                for row in result.log_rows[-len(epoch_losses):]:
                    w.writerow([row[0], row[1], f"{row[2]:.8f}", f"{row[3]:.3e}"])
        is_best = mean_loss < best
        if is_best:
            best = mean_loss
            result.best_epoch = epoch
        if out_dir:
            opt_dump = {"t": optimizer.t,
                        "m": dict(zip(names, optimizer.m)),
                        "v": dict(zip(names, optimizer.v))}
            meta = {"epoch": epoch, "loss": mean_loss,
                    "antialias": cfg.antialias, "omega0": model.config.decoder.omega0}
            save_checkpoint(model, os.path.join(out_dir, "ckpt_last.ckpt"),
                            optimizer=opt_dump, metadata=meta)
            if is_best:
                save_checkpoint(model, os.path.join(out_dir, "ckpt_best.ckpt"),
                                optimizer=opt_dump, metadata=meta)
    return result
