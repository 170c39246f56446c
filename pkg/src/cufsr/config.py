"""Run configuration: JSON with strict unknown-key rejection and defaults.

A run config has three sections: ``model`` (encoder + head architecture),
``train`` (optimization schedule), and ``data`` (PNG directory or synthetic
corpus).  ``effective_config`` returns the fully defaulted dict that gets
echoed next to a run's outputs.
"""

import copy
import json

from . import cuf, encoder, posenc, subpixel, train
from .model import SRModel


class ConfigError(ValueError):
    pass


_ENC_DEFAULTS = {"n": 5, "f_max": 2.0, "kind": "dct"}

DEFAULTS = {
    "model": {
        "seed": 0,
        "encoder": {"channels": 64, "blocks": 4, "kernel": 3},
        "head": {
            "kind": "cuf",
            "kernel": 3,
            "hidden": 32,
            "encodings": {
                "delta": {"n": 5, "f_max": 2.0, "kind": "dct"},
                "scale": {"n": 5, "f_max": 2.0, "kind": "dct"},
                "kidx": {"n": 3, "f_max": 1.0, "kind": "dct"},
            },
            # sub-pixel head only:
            "scale": 2,
            "n_out": None,
        },
    },
    "train": {
        "epochs": 200,
        "steps_per_epoch": 16,
        "batch_size": 8,
        "crop": 16,
        "lr": 1e-3,
        "beta1": 0.9,
        "beta2": 0.999,
        "eps": 1e-8,
        "milestones": [100, 160, 180, 190],
        "scale_min": 1.0,
        "scale_max": 4.0,
        "eval_scales": [2, 3, 4],
        "eval_every": 25,
        "seed": 0,
    },
    "data": {
        "dir": None,
        "synthetic_count": 32,
        "synthetic_size": 64,
        "holdout": 8,
        "seed": 0,
    },
}


def _merge(defaults, user, path):
    if not isinstance(user, dict):
        raise ConfigError(f"{path or 'config'}: expected an object")
    out = copy.deepcopy(defaults)
    for key, val in user.items():
        if key not in defaults:
            raise ConfigError(f"unknown config key {path + key!r}")
        if isinstance(defaults[key], dict) and defaults[key]:
            out[key] = _merge(defaults[key], val, path + key + ".")
        else:
            out[key] = val
    return out


def effective_config(user=None):
    """Merge a user dict over the defaults; unknown keys are an error."""
    cfg = _merge(DEFAULTS, user or {}, "")
    _validate(cfg)
    return cfg


def load_run_config(path):
    try:
        with open(path) as f:
            user = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from e
    return effective_config(user)


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def _validate(cfg):
    m, t, d = cfg["model"], cfg["train"], cfg["data"]
    enc = m["encoder"]
    _require(enc["channels"] >= 1, "model.encoder.channels must be >= 1")
    _require(enc["blocks"] >= 1, "model.encoder.blocks must be >= 1")
    _require(enc["kernel"] % 2 == 1, "model.encoder.kernel must be odd")
    head = m["head"]
    _require(head["kind"] in ("cuf", "subpixel"),
             "model.head.kind must be 'cuf' or 'subpixel'")
    _require(head["kernel"] % 2 == 1, "model.head.kernel must be odd")
    if head["kind"] == "cuf":
        for name, e in head["encodings"].items():
            _require(e["n"] >= 1, f"model.head.encodings.{name}.n must be >= 1")
            _require(e["f_max"] > 0, f"model.head.encodings.{name}.f_max must be > 0")
            _require(e["kind"] in ("dct", "fourier"),
                     f"model.head.encodings.{name}.kind must be 'dct' or 'fourier'")
    else:
        _require(int(head["scale"]) == head["scale"] and head["scale"] >= 1,
                 "model.head.scale must be a positive integer")
    _require(t["epochs"] >= 0, "train.epochs must be >= 0")
    _require(t["batch_size"] >= 1, "train.batch_size must be >= 1")
    _require(t["crop"] >= head["kernel"], "train.crop must be >= the head kernel")
    _require(0 < t["lr"], "train.lr must be > 0")
    _require(1.0 <= t["scale_min"] <= t["scale_max"],
             "train scale range must satisfy 1 <= scale_min <= scale_max")
    _require(t["eval_every"] >= 1, "train.eval_every must be >= 1")
    _require(d["holdout"] >= 0, "data.holdout must be >= 0")
    if d["dir"] is None:
        _require(d["synthetic_count"] > d["holdout"],
                 "data.synthetic_count must exceed data.holdout")


def build_model(cfg):
    m = cfg["model"]
    enc_cfg = encoder.EncoderConfig(**m["encoder"])
    head = m["head"]
    if head["kind"] == "cuf":
        def enc(name):
            e = head["encodings"][name]
            return posenc.EncodingConfig(e["n"], e["f_max"], e["kind"])

        field = cuf.KernelFieldConfig(
            channels=enc_cfg.channels, kernel=head["kernel"], hidden=head["hidden"],
            enc_delta=enc("delta"), enc_scale=enc("scale"), enc_kidx=enc("kidx"))
        return SRModel(enc_cfg, "cuf", cuf.CufHeadConfig(field=field),
                       seed=m["seed"])
    sp = subpixel.SubPixelConfig(channels=enc_cfg.channels, scale=int(head["scale"]),
                                 kernel=head["kernel"], n_out=head["n_out"])
    return SRModel(enc_cfg, "subpixel", sp, seed=m["seed"])


def build_train_config(cfg):
    t = cfg["train"]
    return train.TrainConfig(
        epochs=t["epochs"], steps_per_epoch=t["steps_per_epoch"],
        batch_size=t["batch_size"], crop=t["crop"], lr=t["lr"],
        beta1=t["beta1"], beta2=t["beta2"], eps=t["eps"],
        milestones=tuple(t["milestones"]),
        scale_min=t["scale_min"], scale_max=t["scale_max"],
        eval_scales=tuple(t["eval_scales"]), eval_every=t["eval_every"],
        seed=t["seed"])
