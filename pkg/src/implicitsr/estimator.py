"""sklearn-style estimator facade.

``SuperResolver`` follows the scikit-learn contract (constructor params
stored verbatim, ``get_params``/``set_params``, ``fit`` returns self,
fitted state on trailing-underscore attributes) without depending on
scikit-learn itself, so it drops into Pipelines, clones, and grid search
while the package stays dependency-light.
"""

from __future__ import annotations

import inspect
import math

import numpy as np

from .data import ArrayDataset, DatasetFolder, TrainConfig, train
from .decoder import DecoderConfig, MODES
from .encoder import EncoderConfig
from .model import ModelConfig, SRModel, load_checkpoint, save_checkpoint
from .validation import check_image, check_scale, check_size


class NotFittedError(RuntimeError):
    pass


class SuperResolver:
    """Arbitrary-scale super-resolution, trained on a folder or list of images.

    Parameters mirror the model and training configuration; all are plain
    values so the estimator clones cleanly.
    """

    def __init__(self, feat_channels=64, num_blocks=3, num_layers=4, hidden=256,
                 mode="s_z", init_positional=False, omega0=30.0,
                 scales=(2, 3, 4), patch_base=48, batch_hr=4, epochs=10,
                 lr0=1e-4, halve_every=200, flip_prob=0.5, antialias=True,
                 seed=0):
        self.feat_channels = feat_channels
        self.num_blocks = num_blocks
        self.num_layers = num_layers
        self.hidden = hidden
        self.mode = mode
        self.init_positional = init_positional
        self.omega0 = omega0
        self.scales = scales
        self.patch_base = patch_base
        self.batch_hr = batch_hr
        self.epochs = epochs
        self.lr0 = lr0
        self.halve_every = halve_every
        self.flip_prob = flip_prob
        self.antialias = antialias
        self.seed = seed

    @classmethod
    def _param_names(cls):
        sig = inspect.signature(cls.__init__)
        return [p for p in sig.parameters if p != "self"]

    def get_params(self, deep=True):
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = set(self._param_names())
        for key, value in params.items():
            if key not in valid:
                raise ValueError(f"invalid parameter {key!r} for SuperResolver")
            setattr(self, key, value)
        return self

    def _model_config(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        return ModelConfig(
            encoder=EncoderConfig(feat_channels=self.feat_channels,
                                  num_blocks=self.num_blocks),
            decoder=DecoderConfig(num_layers=self.num_layers, hidden=self.hidden,
                                  mode=self.mode,
                                  init_positional=self.init_positional,
                                  omega0=self.omega0),
            seed=self.seed,
        )

    def _train_config(self):
        return TrainConfig(scales=tuple(self.scales), patch_base=self.patch_base,
                           batch_hr=self.batch_hr, epochs=self.epochs,
                           lr0=self.lr0, halve_every=self.halve_every,
                           flip_prob=self.flip_prob, seed=self.seed,
                           antialias=self.antialias)

    def fit(self, X, y=None, out_dir=None):
        """Train on ``X``: a directory path or a sequence of HxWx3 images."""
        if isinstance(X, (str, bytes)) or hasattr(X, "__fspath__"):
            dataset = DatasetFolder(X)
        else:
            dataset = ArrayDataset([check_image(im, f"X[{i}]")
                                    for i, im in enumerate(X)])
        self.model_ = SRModel.build(self._model_config())
        self.history_ = train(self.model_, dataset, self._train_config(),
                              out_dir=out_dir)
        return self

    def _require_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("this SuperResolver is not fitted; call fit() "
                                 "or load() first")

    def predict(self, X, scale=None, size=None):
        """Super-resolve one image (or a list). Give ``scale`` or exact ``size``."""
        self._require_fitted()
        if isinstance(X, (list, tuple)):
            return [self.predict(x, scale=scale, size=size) for x in X]
        img = check_image(X, "X")
        h, w = img.shape[:2]
        if size is not None:
            out_h, out_w = check_size(size)
        elif scale is not None:
            s = check_scale(scale)
            out_h, out_w = int(round(s * h)), int(round(s * w))
        else:
            raise ValueError("predict needs scale= or size=")
        return self.model_.super_resolve(img, out_h, out_w)

    def save(self, path):
        self._require_fitted()
        save_checkpoint(self.model_, path)
        return self

    def load(self, path):
        """Attach weights from a checkpoint (sets estimator params to match)."""
        model, _, _ = load_checkpoint(path)
        cfg = model.config
        self.set_params(feat_channels=cfg.encoder.feat_channels,
                        num_blocks=cfg.encoder.num_blocks,
                        num_layers=cfg.decoder.num_layers,
                        hidden=cfg.decoder.hidden, mode=cfg.decoder.mode,
                        init_positional=cfg.decoder.init_positional,
                        omega0=cfg.decoder.omega0, seed=cfg.seed)
        self.model_ = model
        return self

    def __repr__(self):
        args = ", ".join(f"{k}={getattr(self, k)!r}" for k in self._param_names())
        return f"SuperResolver({args})"
