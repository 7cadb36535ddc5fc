"""Command-line interface: train / sr / eval / ablate / bench / gradcheck.

Configuration files are flat JSON objects; every key is documented in
DEFAULT_CONFIG and unknown keys are rejected. CLI flags override file keys,
and the effective configuration is echoed into every output directory as
effective_config.json for provenance.

Exit codes: 0 success, 1 verification failure, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from .data import DatasetFolder, TrainConfig, train
from .decoder import DecoderConfig, M_ONLY, M_Z, S_Z, param_count
from .encoder import EncoderConfig
from .estimator import NotFittedError
from .evaluation import (EvalRow, evaluate_dataset, format_db, rows_to_csv,
                         summary_table)
from .imageio import load_image, save_image
from .model import (CheckpointError, ModelConfig, SRModel, load_checkpoint,
                    save_checkpoint)
from .numcore.rng import named_stream
from .validation import check_scale, parse_size
from .verify import full_model_grad_check, tiny_check_config

DEFAULT_CONFIG = {
    # model
    "feat_channels": 64,       # encoder feature-map channels
    "num_blocks": 3,           # encoder residual blocks
    "num_layers": 4,           # decoder layers per branch
    "hidden": 256,             # decoder hidden width
    "mode": "s_z",             # later modulation input: m_only | m_z | s_z
    "init_positional": False,  # sine-initialized positional lift (gates z)
    "omega0": 30.0,            # sine activation frequency
    "seed": 0,
    # training
    "scales": [2, 3, 4],
    "patch_base": 48,          # LR patch side; HR side is patch_base * scale
    "batch_hr": 4,
    "epochs": 10,
    "lr0": 1e-4,
    "halve_every": 200,        # epochs between learning-rate halvings
    "flip_prob": 0.5,
    "antialias": True,         # antialiased bicubic degradation
    # metrics
    "metric_channels": "rgb",  # rgb | y
    "metric_border_crop": 0,
    "metric_on_8bit": False,
}

# Table-style ablation variants: (later modulation input, positional init)
ABLATION_VARIANTS = {
    "a": (M_ONLY, True), "b": (M_ONLY, False),
    "c": (M_Z, True), "d": (M_Z, False),
    "e": (S_Z, True), "f": (S_Z, False),
}


class UsageError(Exception):
    pass


def load_config(path=None, overrides=None):
    cfg = dict(DEFAULT_CONFIG)
    if path is not None:
        with open(path) as f:
            loaded = json.load(f)
        if not isinstance(loaded, dict):
            raise UsageError(f"{path}: config must be a JSON object")
        unknown = sorted(set(loaded) - set(DEFAULT_CONFIG))
        if unknown:
            raise UsageError(f"{path}: unknown config keys {unknown}")
        cfg.update(loaded)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in DEFAULT_CONFIG:
            raise UsageError(f"unknown config key {key!r}")
        cfg[key] = value
    return cfg


def emit_config(cfg):
    return json.dumps(cfg, sort_keys=True, indent=2) + "\n"


def _echo_config(cfg, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "effective_config.json"), "w") as f:
        f.write(emit_config(cfg))


def model_config_from(cfg):
    return ModelConfig(
        encoder=EncoderConfig(feat_channels=int(cfg["feat_channels"]),
                              num_blocks=int(cfg["num_blocks"])),
        decoder=DecoderConfig(num_layers=int(cfg["num_layers"]),
                              hidden=int(cfg["hidden"]), mode=cfg["mode"],
                              init_positional=bool(cfg["init_positional"]),
                              omega0=float(cfg["omega0"])),
        seed=int(cfg["seed"]),
    )


def train_config_from(cfg):
    return TrainConfig(scales=tuple(int(s) for s in cfg["scales"]),
                       patch_base=int(cfg["patch_base"]),
                       batch_hr=int(cfg["batch_hr"]), epochs=int(cfg["epochs"]),
                       lr0=float(cfg["lr0"]), halve_every=int(cfg["halve_every"]),
                       flip_prob=float(cfg["flip_prob"]), seed=int(cfg["seed"]),
                       antialias=bool(cfg["antialias"]))


def _parse_scales(text):
    try:
        return [float(s) if "." in s else int(s) for s in str(text).split(",") if s]
    except ValueError as e:
        raise UsageError(f"bad scale list {text!r}") from e


def _parse_set(items):
    overrides = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        if key not in DEFAULT_CONFIG:
            raise UsageError(f"unknown config key {key!r}")
        overrides[key] = json.loads(raw) if raw[:1] in "[{tfn-0123456789\"" else raw
    return overrides


def cmd_train(args):
    cfg = load_config(args.config, _parse_set(args.set))
    dataset = DatasetFolder(args.data)
    os.makedirs(args.out, exist_ok=True)
    _echo_config(cfg, args.out)
    tcfg = train_config_from(cfg)
    start_epoch = 0
    optimizer = None
    if args.resume:
        model, opt_dump, meta = load_checkpoint(args.resume)
        start_epoch = int(meta.get("epoch", -1)) + 1
        if opt_dump is not None:
            from .numcore.adam import AdamState
            optimizer = AdamState(model.parameters())
            names = [n for n, _ in model.named_parameters()]
            optimizer.t = opt_dump["t"]
            optimizer.m = [opt_dump["m"][n].astype(np.float32) for n in names]
            optimizer.v = [opt_dump["v"][n].astype(np.float32) for n in names]
        print(f"resumed from {args.resume} at epoch {start_epoch}")
    else:
        model = SRModel.build(model_config_from(cfg))

    def log(epoch, loss, lr_now):
        print(f"epoch {epoch:4d}  loss {loss:.6f}  lr {lr_now:.3e}")

    train(model, dataset, tcfg, out_dir=args.out, optimizer=optimizer,
          start_epoch=start_epoch, log_fn=log)
    print(f"checkpoints in {args.out}")
    return 0


def _load_model(path):
    model, _, _ = load_checkpoint(path)
    return model


def cmd_sr(args):
    model = _load_model(args.model)
    img = load_image(args.input)
    h, w = img.shape[:2]
    if args.size:
        out_h, out_w = parse_size(args.size)
    elif args.scale:
        s = check_scale(args.scale)
        out_h, out_w = int(round(s * h)), int(round(s * w))
    else:
        raise UsageError("cmd sr needs --scale or --size")
    sr = model.super_resolve(img, out_h, out_w)
    save_image(args.output, sr)
    print(f"wrote {args.output} ({out_h}x{out_w})")
    return 0


def cmd_eval(args):
    cfg = load_config(args.config, _parse_set(args.set))
    dataset = DatasetFolder(args.dataset)
    scales = _parse_scales(args.scales)
    model = _load_model(args.model) if args.method == "model" else None
    if args.method == "model" and model is None:
        raise UsageError("--method model needs --model")
    rows = evaluate_dataset(dataset, scales, method=args.method, model=model,
                            antialias=bool(cfg["antialias"]),
                            channels=cfg["metric_channels"],
                            border_crop=int(cfg["metric_border_crop"]),
                            on_8bit=bool(cfg["metric_on_8bit"]))
    print(summary_table(rows, f"{args.method} on {args.dataset}"))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _echo_config(cfg, args.out)
        csv_path = os.path.join(args.out, "eval.csv")
        with open(csv_path, "w") as f:
            f.write(rows_to_csv(rows))
        print(f"wrote {csv_path}")
    return 0


def cmd_ablate(args):
    cfg = load_config(args.config, _parse_set(args.set))
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    bad = sorted(set(variants) - set(ABLATION_VARIANTS))
    if bad:
        raise UsageError(f"unknown variants {bad}; pick from a..f")
    dataset = DatasetFolder(args.data)
    eval_scales = _parse_scales(args.eval_scales)
    os.makedirs(args.out, exist_ok=True)
    _echo_config(cfg, args.out)

    header = ["variant", "mi", "ip", "decoder_params"]
    for s in eval_scales:
        for metric in ("psnr", "ssim", "lr_psnr"):
            header.append(f"{metric}_x{s:g}")
    lines = [",".join(header)]
    for v in variants:
        mode, ip = ABLATION_VARIANTS[v]
        vcfg = dict(cfg, mode=mode, init_positional=ip)
        mcfg = model_config_from(vcfg)
        model = SRModel.build(mcfg)
        train(model, dataset, train_config_from(vcfg))
        ckpt = os.path.join(args.out, f"variant_{v}.ckpt")
        save_checkpoint(model, ckpt, metadata={"variant": v})
        rows = evaluate_dataset(dataset, eval_scales, method="model",
                                model=model, antialias=bool(cfg["antialias"]),
                                channels=cfg["metric_channels"],
                                border_crop=int(cfg["metric_border_crop"]),
                                on_8bit=bool(cfg["metric_on_8bit"]))
        means = {r.scale: r for r in rows if r.image == "MEAN"}
        cells = [v, mode, "yes" if ip else "no",
                 str(param_count(mcfg.decoder, mcfg.cz))]
        for s in eval_scales:
            r = means[float(s)]
            cells += [format_db(min(r.psnr_db, 100.0)), f"{r.ssim:.4f}",
                      format_db(min(r.lr_psnr_db, 100.0))]
        lines.append(",".join(cells))
        print(f"variant {v} ({mode}, ip={ip}) done")
    csv_path = os.path.join(args.out, "ablation.csv")
    with open(csv_path, "w") as f:
        f.write("\n".join(lines) + "\n")
    print(f"wrote {csv_path}")
    return 0


def cmd_bench(args):
    model = _load_model(args.model)
    in_h, in_w = parse_size(args.input_size)
    sizes = [parse_size(s) for s in args.output_sizes.split(",") if s]
    rng = named_stream(0, "bench.input")
    img = rng.random((in_h, in_w, 3)).astype(np.float32)
    from .evaluation import sr_bicubic
    from .resample import BicubicKernel
    kernel = BicubicKernel(antialias=False)

    def time_fn(fn):
        fn()  # warm-up
        t0 = time.perf_counter()
        for _ in range(args.repeats):
            fn()
        return (time.perf_counter() - t0) / args.repeats * 1e3

    results = []
    for (oh, ow) in sizes:
        ms_bic = time_fn(lambda: sr_bicubic(img, oh, ow, kernel))
        ms_model = time_fn(lambda: model.super_resolve(img, oh, ow))
        results.append((oh, ow, ms_bic, ms_model))

    col = "".join(f"{f'({oh}x{ow})':>14}" for oh, ow, _, _ in results)
    print(f"input {in_h}x{in_w}, mean runtime (ms) over {args.repeats} runs")
    print(f"{'method':<10}{col}")
    print(f"{'bicubic':<10}" + "".join(f"{r[2]:>14.2f}" for r in results))
    print(f"{'model':<10}" + "".join(f"{r[3]:>14.2f}" for r in results))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        csv_path = os.path.join(args.out, "bench.csv")
        with open(csv_path, "w") as f:
            f.write("method,out_h,out_w,mean_ms\n")
            for oh, ow, ms_bic, ms_model in results:
                f.write(f"bicubic,{oh},{ow},{ms_bic:.4f}\n")
                f.write(f"model,{oh},{ow},{ms_model:.4f}\n")
        print(f"wrote {csv_path}")
    return 0


def cmd_gradcheck(args):
    if args.config:
        cfg = load_config(args.config, _parse_set(args.set))
        mcfg = model_config_from(cfg)
    else:
        mcfg = tiny_check_config()
    err, margin = full_model_grad_check(config=mcfg)
    ok = err < 1e-4
    print(f"max relative gradient error: {err:.3e} (kink margin {margin:.2f}) "
          f"-> {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def build_parser():
    p = argparse.ArgumentParser(prog="implicitsr",
                                description="arbitrary-scale super-resolution")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a model on an image folder")
    t.add_argument("--config")
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--resume")
    t.add_argument("--set", action="append", metavar="KEY=VALUE")
    t.set_defaults(fn=cmd_train)

    s = sub.add_parser("sr", help="super-resolve one image")
    s.add_argument("--model", required=True)
    s.add_argument("--input", required=True)
    s.add_argument("--scale", type=float)
    s.add_argument("--size", help="exact HxW output")
    s.add_argument("--output", required=True)
    s.set_defaults(fn=cmd_sr)

    e = sub.add_parser("eval", help="PSNR/SSIM/LR-PSNR over a dataset")
    e.add_argument("--model")
    e.add_argument("--method", choices=["model", "bicubic"], default="bicubic")
    e.add_argument("--dataset", required=True)
    e.add_argument("--scales", default="2,3,4")
    e.add_argument("--config")
    e.add_argument("--out")
    e.add_argument("--set", action="append", metavar="KEY=VALUE")
    e.set_defaults(fn=cmd_eval)

    a = sub.add_parser("ablate", help="train/evaluate decoder variants a..f")
    a.add_argument("--config")
    a.add_argument("--data", required=True)
    a.add_argument("--out", required=True)
    a.add_argument("--variants", default="a,b,c,d,e,f")
    a.add_argument("--eval-scales", default="3.14,4,8")
    a.add_argument("--set", action="append", metavar="KEY=VALUE")
    a.set_defaults(fn=cmd_ablate)

    b = sub.add_parser("bench", help="forward-pass timing per output size")
    b.add_argument("--model", required=True)
    b.add_argument("--input-size", default="48x48")
    b.add_argument("--output-sizes", default="128x128,256x256,512x512")
    b.add_argument("--repeats", type=int, default=100)
    b.add_argument("--out")
    b.set_defaults(fn=cmd_bench)

    g = sub.add_parser("gradcheck", help="finite-difference check of the full model")
    g.add_argument("--config")
    g.add_argument("--set", action="append", metavar="KEY=VALUE")
    g.set_defaults(fn=cmd_gradcheck)

    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (UsageError, FileNotFoundError, NotADirectoryError, CheckpointError,
            NotFittedError, ValueError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
