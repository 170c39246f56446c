"""Command line interface.

Exit codes: 0 success, 2 usage or configuration error, 3 runtime failure.
All inputs are validated before any output file is written.
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import (checkpoint, config, evaluate, imaging, kernels, train)
from . import cuf as cuf_mod
from . import tensor as T

USAGE_ERROR = 2
RUNTIME_ERROR = 3


def _fail(code, msg):
    print(f"error: {msg}", file=sys.stderr)
    raise SystemExit(code)


def _load_model(path):
    if not os.path.exists(path):
        _fail(USAGE_ERROR, f"model checkpoint not found: {path}")
    try:
        return checkpoint.load_model(path)
    except checkpoint.CheckpointError as e:
        _fail(USAGE_ERROR, str(e))


def _collect_images(path):
    if os.path.isdir(path):
        names = sorted(n for n in os.listdir(path) if n.lower().endswith(".png"))
        if not names:
            _fail(USAGE_ERROR, f"no PNG files in {path}")
        return [(n, imaging.load_png(os.path.join(path, n))) for n in names]
    if not os.path.exists(path):
        _fail(USAGE_ERROR, f"image path not found: {path}")
    return [(os.path.basename(path), imaging.load_png(path))]


# ---------------------------------------------------------------------------
# subcommands

def cmd_train(args):
    cfg = config.load_run_config(args.config) if args.config \
        else config.effective_config()
    os.makedirs(args.out_dir, exist_ok=True)
    with open(os.path.join(args.out_dir, "effective_config.json"), "w") as f:
        json.dump(cfg, f, indent=2)
        f.write("\n")

    data = cfg["data"]
    if data["dir"] is not None:
        images = [im for _, im in _collect_images(data["dir"])]
    else:
        images = train.make_synthetic_textures(
            data["synthetic_count"], data["synthetic_size"], data["seed"])
    holdout = images[len(images) - data["holdout"]:] if data["holdout"] else None
    train_images = images[: len(images) - data["holdout"]] if data["holdout"] else images
    if not train_images:
        _fail(USAGE_ERROR, "no training images left after the holdout split")

    model = config.build_model(cfg)
    tcfg = config.build_train_config(cfg)
    log = None if args.quiet else (lambda s: print(s, flush=True))
    try:
        train.train(model, train_images, tcfg, holdout=holdout,
                    metrics_path=os.path.join(args.out_dir, "metrics.csv"), log=log)
    except T.NonFiniteError as e:
        _fail(RUNTIME_ERROR, f"training diverged: {e}")
    ckpt = os.path.join(args.out_dir, "model.cuf1")
    checkpoint.save_model(ckpt, model)
    print(f"saved {ckpt}")


def cmd_upscale(args):
    model = _load_model(args.model)
    s_w = args.scale_w if args.scale_w is not None else args.scale
    if args.instantiate and (args.scale != int(args.scale) or s_w != args.scale):
        _fail(USAGE_ERROR, "--instantiate needs an integer isotropic scale")
    image = _collect_images(args.input)[0][1]
    try:
        if args.geo_ensemble:
            if s_w != args.scale:
                _fail(USAGE_ERROR, "--geo-ensemble needs an isotropic scale")
            out = evaluate.geo_ensemble(model, image, args.scale)
        else:
            out = model.upscale(image, args.scale, s_w,
                                instantiated=args.instantiate)
    except (ValueError, T.NonFiniteError) as e:
        _fail(RUNTIME_ERROR, str(e))
    imaging.save_png(np.clip(out, 0.0, 1.0), args.output)
    print(f"wrote {args.output} ({out.shape[0]}x{out.shape[1]})")


def cmd_instantiate(args):
    model = _load_model(args.model)
    if model.head_kind != "cuf":
        _fail(USAGE_ERROR, "instantiate needs a CUF-head model")
    if args.scale < 1 or args.scale != int(args.scale):
        _fail(USAGE_ERROR, "scale must be a positive integer")
    bank = cuf_mod.instantiate(model.head, int(args.scale))
    checkpoint.save_checkpoint(
        args.output, model.config_dict(), {"kernels": bank.weights},
        extra={"instantiated_scale": int(args.scale)})
    print(f"wrote {args.output}: kernel bank "
          f"[{bank.weights.shape[0]} offsets, {bank.weights.shape[1]} taps, "
          f"{bank.weights.shape[2]} channels]")


def cmd_flops(args):
    if args.head in ("cuf_instantiated", "subpixel") and args.scale != int(args.scale):
        _fail(USAGE_ERROR, f"{args.head} needs an integer scale")
    try:
        report = evaluate.count_mults(
            args.head, args.height, args.width, args.scale,
            args.channels, args.kernel, n_out=args.n_out,
            blocks=args.blocks, hidden=args.hidden, d_in=args.d_in)
    except ValueError as e:
        _fail(USAGE_ERROR, str(e))
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["stage", "mults", "peak_elems"])
    for name, count in report.stages.items():
        w.writerow([name, count, ""])
    w.writerow(["total", report.total, report.peak_elements])


def cmd_psnr(args):
    scales = _parse_scales(args.scales)
    images = _collect_images(args.hr)
    lr_map = None
    if args.lr:
        if len(scales) != 1:
            _fail(USAGE_ERROR, "--lr needs exactly one scale in --scales")
        lr_map = dict(_collect_images(args.lr))
        missing = [n for n, _ in images if n not in lr_map]
        if missing:
            _fail(USAGE_ERROR, f"--lr directory is missing {missing[0]}")
    model = "bicubic" if args.model == "bicubic" else _load_model(args.model)
    rows, means = evaluate.psnr_eval(model, images, scales, space=args.space,
                                     border=args.border, geo=args.ensemble,
                                     lr_map=lr_map)
    if args.csv:
        with open(args.csv, "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=["image", "scale", "psnr"])
            w.writeheader()
            w.writerows(rows)
    for s in scales:
        print(f"x{s:g}: {means[s]:.2f} dB")


def cmd_analyze_filters(args):
    model = _load_model(args.model)
    if args.scale < 2:
        _fail(USAGE_ERROR, "scale must be >= 2")
    try:
        report = evaluate.filter_pca(model, args.scale)
    except (ValueError, TypeError) as e:
        _fail(USAGE_ERROR, str(e))
    n = len(report.groups[0][1])
    mean_cv = np.mean([cv for _, _, cv in report.groups], axis=0)
    print(f"{report.kind} at s={report.s}: {len(report.groups)} groups, "
          f"{n} eigenvalues each")
    print("mean cumulative variance: "
          + "  ".join(f"{v:.4f}" for v in mean_cv))
    if args.csv:
        with open(args.csv, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["group", "index", "eigenvalue", "cumvar"])
            for label, eig, cv in report.groups:
                for i in range(n):
                    w.writerow([label, i, repr(float(eig[i])), repr(float(cv[i]))])


def cmd_make_data(args):
    images = train.make_synthetic_textures(args.count, args.size, args.seed)
    os.makedirs(args.out, exist_ok=True)
    for i, im in enumerate(images):
        imaging.save_png(im, os.path.join(args.out, f"tex{i:03d}.png"))
    print(f"wrote {len(images)} images to {args.out}")


def cmd_bench(args):
    try:
        from benchmarks import bench_kernels  # repo checkout only
    except ImportError:
        _fail(USAGE_ERROR, "bench requires running from the repository root "
                           "(benchmarks/ is not installed)")
    bench_kernels.main()


def _parse_scales(arg):
    try:
        scales = [float(s) for s in arg.split(",")]
    except ValueError:
        _fail(USAGE_ERROR, f"bad scale list {arg!r}")
    if not scales or any(s < 1 for s in scales):
        _fail(USAGE_ERROR, "scales must all be >= 1")
    return [int(s) if s == int(s) else s for s in scales]


# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(
        prog="cufsr",
        description="Continuous upsampling filter super-resolution "
                    f"(kernel backend: {kernels.backend_name()})")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a model")
    t.add_argument("--config", help="run config JSON (defaults when omitted)")
    t.add_argument("--out-dir", required=True)
    t.add_argument("--quiet", action="store_true")
    t.set_defaults(fn=cmd_train)

    u = sub.add_parser("upscale", help="upscale a PNG")
    u.add_argument("--model", required=True)
    u.add_argument("--scale", type=float, required=True)
    u.add_argument("--scale-w", type=float, help="horizontal scale (anisotropic)")
    u.add_argument("--input", required=True)
    u.add_argument("--output", required=True)
    u.add_argument("--instantiate", action="store_true",
                   help="use the discrete kernel bank (integer scales)")
    u.add_argument("--geo-ensemble", action="store_true",
                   help="geometric self-ensemble over the 8 dihedral transforms")
    u.set_defaults(fn=cmd_upscale)

    i = sub.add_parser("instantiate", help="dump the discrete kernel bank")
    i.add_argument("--model", required=True)
    i.add_argument("--scale", type=int, required=True)
    i.add_argument("--output", required=True)
    i.set_defaults(fn=cmd_instantiate)

    fl = sub.add_parser("flops", help="multiply counts per stage")
    fl.add_argument("--head", choices=evaluate.HEAD_KINDS, required=True)
    fl.add_argument("--height", type=int, required=True)
    fl.add_argument("--width", type=int, required=True)
    fl.add_argument("--scale", type=float, required=True)
    fl.add_argument("--channels", type=int, default=64)
    fl.add_argument("--kernel", type=int, default=3)
    fl.add_argument("--n-out", type=int, default=None)
    fl.add_argument("--blocks", type=int, default=4)
    fl.add_argument("--hidden", type=int, default=32)
    fl.add_argument("--d-in", type=int, default=59)
    fl.set_defaults(fn=cmd_flops)

    ps = sub.add_parser("psnr", help="PSNR of a model (or bicubic) on images")
    ps.add_argument("--model", required=True, help="checkpoint path or 'bicubic'")
    ps.add_argument("--hr", required=True, help="ground-truth PNG file or directory")
    ps.add_argument("--lr", help="precomputed LR inputs matched by filename "
                                 "(single scale only; default: bicubic downscale)")
    ps.add_argument("--scales", default="2,3,4")
    ps.add_argument("--space", choices=["rgb", "y"], default="rgb")
    ps.add_argument("--border", type=int, default=0)
    ps.add_argument("--ensemble", action="store_true")
    ps.add_argument("--csv")
    ps.set_defaults(fn=cmd_psnr)

    an = sub.add_parser("analyze-filters",
                        help="eigenvalue spectra of the upsampling filters")
    an.add_argument("--model", required=True)
    an.add_argument("--scale", type=int, required=True)
    an.add_argument("--csv")
    an.set_defaults(fn=cmd_analyze_filters)

    md = sub.add_parser("make-data", help="write a synthetic texture corpus")
    md.add_argument("--out", required=True)
    md.add_argument("--count", type=int, default=32)
    md.add_argument("--size", type=int, default=64)
    md.add_argument("--seed", type=int, default=0)
    md.set_defaults(fn=cmd_make_data)

    b = sub.add_parser("bench", help="compare kernel backends")
    b.set_defaults(fn=cmd_bench)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.fn(args)
    except SystemExit:
        raise
    except config.ConfigError as e:
        _fail(USAGE_ERROR, str(e))
    except (OSError, T.NonFiniteError, ValueError) as e:
        _fail(RUNTIME_ERROR, str(e))
    return 0


if __name__ == "__main__":
    sys.exit(main())
