"""Encoder + upsampling head glued into one super-resolution model."""

import numpy as np

from . import cuf, encoder, subpixel
from . import posenc
from . import tensor as T

CUF = "cuf"
SUBPIXEL = "subpixel"


class SRModel:
    """Bundles encoder config/params with a CUF or sub-pixel head.

    Parameters live in a single named set ("enc.*" / "head.*"), initialized
    deterministically from one seed: encoder first, then head.
    """

    def __init__(self, encoder_config, head_kind, head_config, seed=0, params=None):
        self.encoder_config = encoder_config
        self.head_kind = head_kind
        self.head_config = head_config
        if head_kind == CUF and head_config.channels != encoder_config.channels:
            raise ValueError("CUF head channels must match encoder channels")
        if head_kind == SUBPIXEL and head_config.channels != encoder_config.channels:
            raise ValueError("sub-pixel head channels must match encoder channels")
        if params is None:
            rng = np.random.default_rng(seed)
            params = encoder.init_encoder_params(encoder_config, rng, prefix="enc.")
            if head_kind == CUF:
                self.head = cuf.CufHead(head_config, rng=rng, prefix="head.")
            elif head_kind == SUBPIXEL:
                self.head = subpixel.SubPixelHead(head_config, rng=rng, prefix="head.")
            else:
                raise ValueError(f"unknown head kind {head_kind!r}")
            params.merge(self.head.params)
            self.head.params = params
            if head_kind == CUF:
                self.head.field.params = params
        else:
            if head_kind == CUF:
                self.head = cuf.CufHead(head_config, params=params, prefix="head.")
            elif head_kind == SUBPIXEL:
                self.head = subpixel.SubPixelHead(head_config, params=params,
                                                  prefix="head.")
            else:
                raise ValueError(f"unknown head kind {head_kind!r}")
        self.params = params

    # -- forward paths ------------------------------------------------------

    def features(self, image_t, unfolded=True):
        if self.head_kind == CUF and unfolded:
            return encoder.featurize(self.encoder_config, self.params, image_t,
                                     self.head_config.kernel, prefix="enc.")
        return encoder.encode(self.encoder_config, self.params, image_t,
                              prefix="enc.")

    def decode_train(self, image_t, s, target_ys, target_xs):
        """Training-time decode at explicit target coordinates."""
        if self.head_kind == CUF:
            feats = self.features(image_t)
            return cuf.decode_continuous(self.head, feats, s, s,
                                         target_ys, target_xs)
        feats = self.features(image_t, unfolded=False)
        full = subpixel.subpixel_forward(self.head, feats)
        return T.gather_pixels(full, np.asarray(target_ys, dtype=np.int64),
                               np.asarray(target_xs, dtype=np.int64))

    def upscale(self, image, s_h, s_w=None, instantiated=False):
        """[H,W,3] numpy image in [0,1] -> upscaled numpy image (unclamped)."""
        if s_w is None:
            s_w = s_h
        image_t = T.Tensor(np.asarray(image, dtype=np.float32))
        if self.head_kind == SUBPIXEL:
            if s_h != self.head_config.scale or s_w != self.head_config.scale:
                raise ValueError(
                    f"sub-pixel head is fixed at scale {self.head_config.scale}")
            out = subpixel.subpixel_forward(self.head,
                                            self.features(image_t, unfolded=False))
            return out.data
        if instantiated:
            if s_h != s_w or s_h != int(s_h):
                raise ValueError("instantiated decode needs an integer isotropic scale")
            bank = cuf.instantiate(self.head, int(s_h))
            out = cuf.decode_instantiated(self.head, bank,
                                          self.features(image_t, unfolded=False))
            return out.data
        out = cuf.decode_continuous(self.head, self.features(image_t), s_h, s_w)
        return out.data

    # -- config (de)serialization ------------------------------------------

    def config_dict(self):
        enc = {
            "channels": self.encoder_config.channels,
            "blocks": self.encoder_config.blocks,
            "kernel": self.encoder_config.kernel,
        }
        if self.head_kind == CUF:
            f = self.head_config.field
            head = {
                "kind": CUF,
                "channels": f.channels,
                "kernel": f.kernel,
                "hidden": f.hidden,
                "encodings": {
                    name: {"n": e.n_per_axis, "f_max": e.f_max, "kind": e.kind}
                    for name, e in [("delta", f.enc_delta), ("scale", f.enc_scale),
                                    ("kidx", f.enc_kidx)]
                },
            }
        else:
            head = {
                "kind": SUBPIXEL,
                "channels": self.head_config.channels,
                "scale": self.head_config.scale,
                "kernel": self.head_config.kernel,
                "n_out": self.head_config.n_out,
            }
        return {"encoder": enc, "head": head}


def head_config_from_dict(d):
    if d["kind"] == CUF:
        encs = d["encodings"]

        def enc(name):
            e = encs[name]
            return posenc.EncodingConfig(e["n"], e["f_max"], e.get("kind", "dct"))

        field = cuf.KernelFieldConfig(
            channels=d["channels"], kernel=d["kernel"], hidden=d["hidden"],
            enc_delta=enc("delta"), enc_scale=enc("scale"), enc_kidx=enc("kidx"))
        return CUF, cuf.CufHeadConfig(field=field)
    if d["kind"] == SUBPIXEL:
        return SUBPIXEL, subpixel.SubPixelConfig(
            channels=d["channels"], scale=d["scale"], kernel=d["kernel"],
            n_out=d.get("n_out"))
    raise ValueError(f"unknown head kind {d['kind']!r}")


def model_from_config(cfg, seed=0, params=None):
    enc_cfg = encoder.EncoderConfig(**cfg["encoder"])
    kind, head_cfg = head_config_from_dict(cfg["head"])
    return SRModel(enc_cfg, kind, head_cfg, seed=seed, params=params)
