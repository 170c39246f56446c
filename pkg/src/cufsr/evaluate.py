"""Evaluation and analysis: PSNR harness, geometric self-ensemble, exact
multiply/memory accounting, and the filter-redundancy eigenvalue analysis.

"FLOPs" throughout are multiply counts -- adds are excluded -- and
zero-padded convolution taps count.  The memory metric is the peak number
of simultaneously live intermediate tensor elements under a straight-line
execution order.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import cuf, imaging, subpixel
from . import tensor as T

HEAD_KINDS = ("cuf_continuous", "cuf_instantiated", "subpixel")


# ---------------------------------------------------------------------------
# PSNR harness

def psnr_eval(model, images, scales, space="rgb", border=0, geo=False,
              lr_map=None):
    """Per-image and mean PSNR per scale.

    ``model`` is an SRModel or the string "bicubic"; ``images`` is a list of
    (name, hr_array) pairs.  LR inputs are synthesized by antialiased bicubic
    downscale, or taken from ``lr_map`` (name -> array) when provided.
    space selects RGB or the BT.601 luminance channel.
    """
    if space not in ("rgb", "y"):
        raise ValueError(f"space must be 'rgb' or 'y', got {space!r}")
    if lr_map is not None and len(scales) != 1:
        raise ValueError("precomputed LR inputs need exactly one scale")
    rows = []
    for name, hr in images:
        for s in scales:
            if lr_map is not None:
                lr = lr_map[name]
            else:
                lr = imaging.bicubic_resize(hr, 1.0 / s) if s != 1 else hr
            gt = hr[: int(math.floor(s * lr.shape[0])),
                    : int(math.floor(s * lr.shape[1]))]
            if model == "bicubic":
                sr = imaging.bicubic_resize(lr, s) if s != 1 else lr
            elif geo:
                sr = geo_ensemble(model, lr, s)
            else:
                sr = model.upscale(lr, s)
            sr = np.clip(sr, 0.0, 1.0)
            if space == "y":
                sr, gt = imaging.rgb_to_y(sr), imaging.rgb_to_y(gt)
            rows.append({"image": name, "scale": s, "psnr": imaging.psnr(gt, sr, border)})
    means = {}
    for s in scales:
        vals = [r["psnr"] for r in rows if r["scale"] == s]
        means[s] = float(np.mean(vals))
    return rows, means


def geo_ensemble(model, image, s):
    """Average the model over the 8 dihedral transforms of the input."""
    acc = None
    for t in range(8):
        out = model.upscale(imaging.apply_dihedral(image, t), s)
        out = imaging.invert_dihedral(out, t)
        acc = out if acc is None else acc + out
    return acc / 8.0


# ---------------------------------------------------------------------------
# cost accounting

@dataclass
class CostReport:
    head_kind: str
    config: dict
    stages: dict
    peak_elements: int

    @property
    def total(self):
        return sum(self.stages.values())


def _mlp_mults(d_in, hidden, channels):
    return d_in * hidden + hidden * hidden + hidden * hidden + hidden * channels


def unique_offsets(n, s):
    """Number of distinct quantized sub-pixel offsets along one axis of an
    n-pixel source upscaled by s (matches the decoder's memoization)."""
    t = np.arange(int(math.floor(s * n)), dtype=np.float64)
    ratio = t / s
    delta = np.round(ratio - np.floor(ratio), 9)
    delta[delta >= 1.0] = 0.0      # same fold as the decoder's quantization
    return len(np.unique(delta))


def encoder_mults(h, w, channels, blocks, kernel=3):
    """Toy residual encoder: head conv, B x (conv-ReLU-conv), tail conv."""
    k2 = kernel * kernel
    c = channels
    return h * w * k2 * (3 * c + blocks * 2 * c * c + c * c)


def count_mults(head_kind, h, w, s, channels, kernel, n_out=None,
                blocks=4, hidden=32, d_in=59):
    """Exact multiply counts per stage for one upscale of an HxW input.

    ``d_in``/``hidden`` size the kernel-field MLP (defaults match the
    standard DCT encodings).  Counts equal what the instrumented forward
    pass performs, including zero-padded taps.
    """
    if head_kind not in HEAD_KINDS:
        raise ValueError(f"head_kind must be one of {HEAD_KINDS}")
    c, k = channels, kernel
    if n_out is None:
        n_out = c
    integer_s = float(s) == int(s)
    if head_kind in ("cuf_instantiated", "subpixel") and not integer_s:
        raise ValueError(f"{head_kind} needs an integer scale, got {s}")
    th, tw = int(math.floor(s * h)), int(math.floor(s * w))
    p = th * tw
    mlp = _mlp_mults(d_in, hidden, c)
    stages = {"encoder": encoder_mults(h, w, c, blocks)}

    if head_kind == "subpixel":
        s = int(s)
        stages["expansion"] = h * w * (s * s * n_out) * c * k * k
        stages["dense"] = p * n_out * 3
    else:
        if head_kind == "cuf_instantiated":
            n_queries = int(s) ** 2 * k * k
        else:
            n_queries = unique_offsets(h, s) * unique_offsets(w, s) * k * k
        stages["hypernetwork"] = n_queries * mlp
        stages["depthwise"] = p * c * k * k
        stages["dense"] = p * (c * c + c * 3)

    config = {"H": h, "W": w, "s": s, "C": c, "K": k, "N_out": n_out,
              "blocks": blocks, "hidden": hidden, "d_in": d_in,
              "head": head_kind}
    return CostReport(head_kind, config, stages, _peak_elements(head_kind, config))


def _peak_elements(head_kind, cfg):
    """Largest live set of intermediate elements, coarse straight-line order."""
    h, w, c, k = cfg["H"], cfg["W"], cfg["C"], cfg["K"]
    s, n_out = cfg["s"], cfg["N_out"]
    th, tw = int(math.floor(s * h)), int(math.floor(s * w))
    p = th * tw
    hw = h * w
    # Encoder: input + head features (global skip) + block input + block temp.
    enc_peak = hw * 3 + 3 * hw * c
    f = c * k * k
    if head_kind == "subpixel":
        steps = [hw * c + hw * (int(s) ** 2) * n_out,   # features + expansion out
                 2 * p * n_out,                         # shuffle in/out
                 p * n_out + p * 3]                     # projection
    elif head_kind == "cuf_instantiated":
        steps = [hw * c * (1 + int(s) ** 2),            # features + s^2 dw outputs
                 2 * p * c,                             # shuffle in/out
                 p * c + p * 3]
    else:
        steps = [hw * c + hw * f,                       # features + unfolded
                 hw * f + p * f,                        # gather to target grid
                 3 * p * f,                             # kernels, taps, product
                 p * c + p * c,                         # pointwise
                 p * c + p * 3]
    return max([enc_peak] + steps)


def per_pixel_ratio(c, k):
    """(K^2 + C) / (K^2 * C): instantiated depthwise+pointwise vs the
    sub-pixel expansion conv, per output pixel, shared RGB layer excluded."""
    return (k * k + c) / (k * k * c)


def cuf_dominates(k, n_in, n_out):
    """Efficiency condition for the instantiated head against a sub-pixel
    head used directly as output layer."""
    return k * k + n_in + n_out < n_out * k * k


def measure_mults(model, h, w, s, instantiated=False, seed=0):
    """Run the real forward pass under the multiply counter -> stage dict."""
    rng = np.random.default_rng(seed)
    image = rng.random((h, w, 3)).astype(np.float32)
    with T.MultCounter() as counter:
        model.upscale(image, s, instantiated=instantiated)
    return dict(counter.by_stage)


# ---------------------------------------------------------------------------
# filter redundancy (eigenvalue analysis)

@dataclass
class EigenReport:
    kind: str
    s: int
    groups: list = field(default_factory=list)  # (label, eigenvalues, cumvar)


def _group_eigs(m):
    """Eigenvalues of the row-centered Gram matrix, sorted descending.

    The rows-x-rows Gram matrix shares its nonzero spectrum with the full
    feature covariance but stays at most s^2 x s^2.
    """
    m = m - m.mean(axis=0, keepdims=True)
    gram = m @ m.T
    eig = np.linalg.eigvalsh(gram)[::-1]
    total = eig.sum()
    cumvar = np.cumsum(eig) / total if total > 0 else np.zeros_like(eig)
    return eig, cumvar


def filter_pca(head_or_model, s):
    """Per-group eigenvalue spectra of the s^2 upsampling filters.

    CUF: per encoder channel, the s^2 x K^2 matrix of instantiated kernels.
    Sub-pixel: per output-feature group, the s^2 x (C*K^2) matrix of
    expansion filters.
    """
    head = getattr(head_or_model, "head", head_or_model)
    if s * s < 2:
        raise ValueError("need s^2 >= 2 rows for the eigen analysis")
    report = EigenReport(kind=type(head).__name__, s=int(s))
    if isinstance(head, cuf.CufHead):
        bank = cuf.instantiate(head, int(s))           # [s^2, K^2, C]
        for c in range(head.config.channels):
            eig, cv = _group_eigs(bank.weights[:, :, c].astype(np.float64))
            report.groups.append((f"channel{c}", eig, cv))
    elif isinstance(head, subpixel.SubPixelHead):
        cfg = head.config
        if int(s) != cfg.scale:
            raise ValueError(f"sub-pixel head is fixed at scale {cfg.scale}")
        w = head.params[head.prefix + "expand.w"].value.data
        s2 = cfg.scale ** 2
        for n in range(cfg.n_out):
            m = w[n * s2:(n + 1) * s2].reshape(s2, -1).astype(np.float64)
            eig, cv = _group_eigs(m)
            report.groups.append((f"feature{n}", eig, cv))
    else:
        raise TypeError(f"unsupported head {type(head).__name__}")
    return report
