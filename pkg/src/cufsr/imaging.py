"""Image I/O, color conversion, bicubic resampling, crops, and PSNR.

Images are float32 numpy arrays of shape [H, W, 3] with values in [0, 1]
(clamped at the I/O boundaries).  All functions here are pure.
"""

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image as PILImage


def load_png(path):
    """Load an 8-bit RGB or RGBA PNG as [H, W, 3] float32 in [0, 1].

    Alpha is dropped; pixel p maps to p / 255 exactly.
    """
    img = PILImage.open(path)
    if img.mode not in ("RGB", "RGBA", "L", "LA", "P"):
        raise ValueError(f"unsupported image mode {img.mode!r} (8-bit RGB/RGBA only)")
    arr = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
    return arr


def save_png(image, path):
    """Save [H, W, 3] floats in [0, 1] as an 8-bit RGB PNG (round(v*255))."""
    q = np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    PILImage.fromarray(q, mode="RGB").save(path, format="PNG")


def rgb_to_y(image):
    """BT.601 studio-swing luma, the SR literature's YCbCr luminance.

    Y = (65.481 R + 128.553 G + 24.966 B + 16) / 255 for inputs in [0, 1].
    Returns [H, W, 1].
    """
    r, g, b = image[..., 0], image[..., 1], image[..., 2]
    y = (65.481 * r + 128.553 * g + 24.966 * b + 16.0) / 255.0
    return y[..., None].astype(image.dtype)


def _cubic(x):
    """Catmull-Rom-family cubic kernel, a = -0.5."""
    x = np.abs(x)
    x2 = x * x
    x3 = x2 * x
    return np.where(
        x <= 1.0,
        1.5 * x3 - 2.5 * x2 + 1.0,
        np.where(x < 2.0, -0.5 * x3 + 2.5 * x2 - 4.0 * x + 2.0, 0.0),
    )


def _resize_axis_weights(n_in, n_out, scale, antialias):
    """Index matrix [n_out, taps] (edge-clamped) and normalized weights."""
    # Output pixel centers mapped into the input grid.
    u = (np.arange(n_out) + 0.5) / scale - 0.5
    widen = 1.0 / scale if (antialias and scale < 1.0) else 1.0
    support = 2.0 * widen
    taps = int(math.ceil(support)) * 2 + 1
    left = np.floor(u - support).astype(np.int64) + 1
    idx = left[:, None] + np.arange(taps)
    w = _cubic((u[:, None] - idx) / widen)
    w = w / w.sum(axis=1, keepdims=True)
    idx = np.clip(idx, 0, n_in - 1)
    return idx, w


def bicubic_resize(image, s_h, s_w=None, antialias=True):
    """Separable bicubic resample to [floor(s_h*H), floor(s_w*W), C].

    On downscale the kernel support is widened by 1/scale (antialiasing on
    by default), matching the standard LR-synthesis convention.  Borders are
    edge-clamped; weights at each sample position are normalized to sum to 1.
    """
    if s_w is None:
        s_w = s_h
    h, w = image.shape[0], image.shape[1]
    oh, ow = int(math.floor(s_h * h)), int(math.floor(s_w * w))
    if oh < 1 or ow < 1:
        raise ValueError(f"output size {oh}x{ow} < 1")
    iy, wy = _resize_axis_weights(h, oh, s_h, antialias)
    ix, wx = _resize_axis_weights(w, ow, s_w, antialias)
    tmp = np.einsum("ot,otwc->owc", wy, image.astype(np.float64)[iy], optimize=True)
    out = np.einsum("pt,optc->opc", wx, tmp[:, ix], optimize=True)
    return out.astype(np.float32)


def psnr(a, b, border=0):
    """10*log10(1/MSE) for [0,1] data; +inf for identical inputs.

    ``border`` crops that many pixels from each edge first (the common SR
    benchmark convention passes ceil(s)); 0 means full frame.
    """
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    if border:
        a = a[border:-border, border:-border]
        b = b[border:-border, border:-border]
    d = a.astype(np.float64) - b.astype(np.float64)
    mse = np.mean(d * d)
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(1.0 / mse))


# ---------------------------------------------------------------------------
# dihedral group (8 transforms: 4 rotations x optional horizontal flip)

def apply_dihedral(image, t):
    """Transform t in 0..7: rot90 by (t % 4), flipped first when t >= 4."""
    if not 0 <= t <= 7:
        raise ValueError(f"dihedral index {t} out of range")
    out = image[:, ::-1] if t >= 4 else image
    return np.ascontiguousarray(np.rot90(out, k=t % 4))


def invert_dihedral(image, t):
    """Exact inverse: invert_dihedral(apply_dihedral(x, t), t) == x bit-exactly."""
    if not 0 <= t <= 7:
        raise ValueError(f"dihedral index {t} out of range")
    out = np.rot90(image, k=-(t % 4))
    if t >= 4:
        out = out[:, ::-1]
    return np.ascontiguousarray(out)


# ---------------------------------------------------------------------------
# training crops

@dataclass
class CropPair:
    """An aligned LR/HR training pair.

    ``origin`` is the (real-valued) HR-grid coordinate of hr_patch's first
    pixel relative to the LR patch: querying the decoder on the LR patch at
    target coordinates origin + (0..crop-1) per axis reproduces exactly the
    source indices and sub-pixel offsets of the global target pixels that
    hr_patch was taken from.
    """

    lr: np.ndarray
    hr: np.ndarray
    origin: tuple


def random_crop_pair(hr, s, crop, rng, lr=None):
    """Sample an aligned (lr_patch, hr_patch, origin) triple at scale s.

    lr is bicubic_resize(hr, 1/s) (precomputable via the ``lr`` argument)
    cropped to crop x crop; hr_patch is a crop x crop window of ground-truth
    pixels whose decode sources all fall inside the LR patch.
    """
    hh, hw = hr.shape[0], hr.shape[1]
    if lr is None:
        lr = bicubic_resize(hr, 1.0 / s) if s != 1 else hr
    lh, lw = lr.shape[0], lr.shape[1]
    if lh < crop or lw < crop:
        raise ValueError(f"image too small: LR {lh}x{lw} for crop {crop} at s={s}")

    def axis(n_lr, n_hr):
        o = int(rng.integers(0, n_lr - crop + 1))
        t0_min = int(math.ceil(s * o - 1e-9))
        t0_max = min(int(math.ceil(s * (o + crop) - 1e-9)) - 1, n_hr - 1) - (crop - 1)
        t0 = int(rng.integers(t0_min, t0_max + 1))
        return o, t0

    oy, ty0 = axis(lh, hh)
    ox, tx0 = axis(lw, hw)
    lr_patch = lr[oy:oy + crop, ox:ox + crop]
    hr_patch = hr[ty0:ty0 + crop, tx0:tx0 + crop]
    origin = (ty0 - s * oy, tx0 - s * ox)
    return CropPair(lr_patch, hr_patch, origin)
