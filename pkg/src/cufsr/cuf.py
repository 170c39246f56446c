"""Continuous Upsampling Filters: the hypernetwork kernel field, the
continuous decode path for arbitrary (including fractional) scales, and
instantiation to a discrete depthwise kernel bank for integer scales.

The kernel field maps (sub-pixel offset, scale, kernel tap index) -- each
positionally encoded as a 2D input -- through a 4-layer MLP to a C-vector
of depthwise kernel weights.  A target pixel at integer coordinate x reads
its source at floor(x/s) with sub-pixel offset mod(x, s)/s, which makes the
generated filters periodic in x for integer s; instantiation exploits that
periodicity by pre-querying the field at the s^2 distinct offsets.
"""

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import posenc
from . import tensor as T

# Sub-pixel offsets are quantized at this decimal before memoizing kernel
# queries; for integer s the full target grid collapses to s^2 queries.
_DELTA_DECIMALS = 9


@dataclass
class KernelFieldConfig:
    channels: int = 64
    kernel: int = 3
    hidden: int = 32
    enc_delta: posenc.EncodingConfig = dc_field(
        default_factory=lambda: posenc.EncodingConfig(5, 2.0))
    enc_scale: posenc.EncodingConfig = dc_field(
        default_factory=lambda: posenc.EncodingConfig(5, 2.0))
    enc_kidx: posenc.EncodingConfig = dc_field(
        default_factory=lambda: posenc.EncodingConfig(3, 1.0))

    @property
    def d_in(self):
        return self.enc_delta.dim_2d + self.enc_scale.dim_2d + self.enc_kidx.dim_2d

    @property
    def widths(self):
        h = self.hidden
        return [self.d_in, h, h, h, self.channels]

    def param_count(self):
        ws = self.widths
        return sum(a * b + b for a, b in zip(ws[:-1], ws[1:]))


class KernelField:
    """Hypernetwork over (delta, scale, tap index); 4 affine layers with
    ReLU after each hidden layer and a linear output (kernel weights must
    take both signs)."""

    def __init__(self, config, rng=None, params=None, prefix="field."):
        self.config = config
        self.prefix = prefix
        if params is None:
            params = T.ParameterSet()
            ws = config.widths
            for i, (a, b) in enumerate(zip(ws[:-1], ws[1:])):
                params.add(f"{prefix}l{i}.w", T.uniform_init(rng, (a, b), a))
                params.add(f"{prefix}l{i}.b", T.uniform_init(rng, (b,), a))
        self.params = params

    def mlp(self, x):
        """[Q, D_in] encoded queries -> [Q, C] kernel vectors."""
        with T.stage("hypernetwork"):
            n_layers = len(self.config.widths) - 1
            for i in range(n_layers):
                x = T.dense(x, self.params[f"{self.prefix}l{i}.w"].value,
                            self.params[f"{self.prefix}l{i}.b"].value)
                if i < n_layers - 1:
                    x = T.relu(x)
            return x

    def encode_queries(self, dys, dxs, s_h, s_w, kis, kjs):
        """Encode aligned arrays of (delta, tap) queries at a fixed scale."""
        c = self.config
        nd, ns, nk = normalize_inputs(
            (np.asarray(dys, dtype=np.float64), np.asarray(dxs, dtype=np.float64)),
            (s_h, s_w),
            (np.asarray(kis, dtype=np.float64), np.asarray(kjs, dtype=np.float64)),
            c.kernel,
        )
        e_delta = posenc.encode_2d(nd[0], nd[1], c.enc_delta)
        e_scale = posenc.encode_2d(
            np.full_like(nd[0], ns[0]), np.full_like(nd[0], ns[1]), c.enc_scale)
        e_kidx = posenc.encode_2d(nk[0], nk[1], c.enc_kidx)
        return np.concatenate([e_delta, e_scale, e_kidx], axis=-1).astype(np.float32)


def normalize_inputs(delta, s, k_idx, kernel):
    """Map raw field inputs into [0,1]^2 triples.

    delta passes through unchanged, scale maps via 1/s, and the tap index
    maps via k/(K-1) (0 when K = 1).
    """
    dy, dx = delta
    s_h, s_w = s
    ki, kj = k_idx
    denom = (kernel - 1) if kernel > 1 else 1
    return (
        (dy, dx),
        (1.0 / s_h, 1.0 / s_w),
        (np.asarray(ki) / denom, np.asarray(kj) / denom),
    )


def kernel_at(field, delta, s, k_idx):
    """Query the field at one (delta, scale, tap) -> [C] tensor."""
    q = field.encode_queries(
        [delta[0]], [delta[1]], s[0], s[1], [k_idx[0]], [k_idx[1]])
    out = field.mlp(T.Tensor(q))
    return T.reshape(out, (field.config.channels,))


def kernel_full(field, delta, s):
    """Stack kernel_at over all K^2 taps in (ki*K + kj) order -> [K^2, C]."""
    k = field.config.kernel
    taps = np.arange(k * k)
    q = field.encode_queries(
        np.full(k * k, delta[0]), np.full(k * k, delta[1]),
        s[0], s[1], taps // k, taps % k)
    return field.mlp(T.Tensor(q))


@dataclass
class CufHeadConfig:
    field: KernelFieldConfig = dc_field(default_factory=KernelFieldConfig)

    @property
    def channels(self):
        return self.field.channels

    @property
    def kernel(self):
        return self.field.kernel

    def dense_param_count(self):
        c = self.channels
        return (c * c + c) + (c * 3 + 3)


class CufHead:
    """Kernel field plus the two pointwise layers mapping features to RGB."""

    def __init__(self, config, rng=None, params=None, prefix="head."):
        self.config = config
        self.prefix = prefix
        if params is None:
            params = T.ParameterSet()
            c = config.channels
            self.field = KernelField(config.field, rng, prefix=prefix + "field.")
            params.merge(self.field.params)
            self.field.params = params
            params.add(prefix + "dense1.w", T.uniform_init(rng, (c, c), c))
            params.add(prefix + "dense1.b", T.uniform_init(rng, (c,), c))
            params.add(prefix + "dense2.w", T.uniform_init(rng, (c, 3), c))
            params.add(prefix + "dense2.b", T.uniform_init(rng, (3,), c))
        else:
            self.field = KernelField(config.field, params=params,
                                     prefix=prefix + "field.")
        self.params = params

    def project(self, x):
        """Pointwise C -> C -> 3 with an activation in between."""
        with T.stage("dense"):
            x = T.dense(x, self.params[self.prefix + "dense1.w"].value,
                        self.params[self.prefix + "dense1.b"].value)
            x = T.relu(x)
            return T.dense(x, self.params[self.prefix + "dense2.w"].value,
                           self.params[self.prefix + "dense2.b"].value)


@dataclass
class InstantiatedKernels:
    """Discrete depthwise kernel bank for integer scale s.

    ``weights[i*s + j]`` holds the [K^2, C] kernel for sub-pixel offset
    (i/s, j/s).
    """

    s: int
    weights: np.ndarray


def _target_axis(targets, scale, n_src):
    """Per-axis source indices, quantized deltas, and the unique-delta map."""
    t = np.asarray(targets, dtype=np.float64)
    ratio = t / scale
    src = np.floor(ratio)
    delta = np.round(ratio - src, _DELTA_DECIMALS)
    # quantization can round an offset just under 1 up to exactly 1.0;
    # fold it into the next source pixel so delta stays in [0, 1)
    bump = delta >= 1.0
    src[bump] += 1
    delta[bump] = 0.0
    src = np.clip(src.astype(np.int64), 0, n_src - 1)
    uniq, inverse = np.unique(delta, return_inverse=True)
    return src, uniq, inverse


def decode_continuous(head, features_lr, s_h, s_w, target_ys=None, target_xs=None):
    """Decode unfolded LR features to RGB at target pixels.

    ``features_lr`` is the unfolded encoder output [H, W, C*K^2].  The
    default target grid is the full floor(s*H) x floor(s*W) image; explicit
    (real-valued) target coordinate arrays support training on HR crops.
    Each target pixel x reads source floor(x/s) with offset mod(x, s)/s;
    kernel queries are deduplicated over the distinct quantized offsets.
    """
    cfg = head.config
    c, k = cfg.channels, cfg.kernel
    h, w = features_lr.shape[0], features_lr.shape[1]
    if features_lr.shape[2] != c * k * k:
        raise T.ShapeError(
            f"expected unfolded features with {c * k * k} channels, got {features_lr.shape}")
    if target_ys is None:
        target_ys = np.arange(int(math.floor(s_h * h)))
    if target_xs is None:
        target_xs = np.arange(int(math.floor(s_w * w)))
    th, tw = len(target_ys), len(target_xs)
    if th < 1 or tw < 1:
        raise ValueError("target size < 1")

    src_y, uy, inv_y = _target_axis(target_ys, s_h, h)
    src_x, ux, inv_x = _target_axis(target_xs, s_w, w)

    # One batched hypernetwork pass over the unique (delta_y, delta_x) pairs,
    # K^2 taps each.
    n_uy, n_ux, kk = len(uy), len(ux), k * k
    grid_dy = np.repeat(uy, n_ux * kk)
    grid_dx = np.tile(np.repeat(ux, kk), n_uy)
    taps = np.tile(np.arange(kk), n_uy * n_ux)
    queries = head.field.encode_queries(grid_dy, grid_dx, s_h, s_w,
                                        taps // k, taps % k)
    kernels = head.field.mlp(T.Tensor(queries))          # [U*K^2, C]
    kernels = T.reshape(kernels, (n_uy * n_ux, kk, c))

    # Per-pixel kernel lookup and depthwise dot against the gathered taps.
    with T.stage("depthwise"):
        uidx = (inv_y[:, None] * n_ux + inv_x[None, :]).reshape(-1)
        k_px = T.take_rows(kernels, uidx)                # [P, K^2, C]
        k_px = T.transpose_last2(k_px)                   # [P, C, K^2]
        feats = T.gather_pixels(features_lr, src_y, src_x)
        feats = T.reshape(feats, (th * tw, c, kk))
        mixed = T.sum_last(T.mul(k_px, feats))           # [P, C]

    rgb = head.project(mixed)
    return T.reshape(rgb, (th, tw, 3))


def instantiate(head, s):
    """Pre-query the field at the s^2 sub-pixel offsets of integer scale s."""
    if not (isinstance(s, (int, np.integer)) and s >= 1):
        raise ValueError(f"instantiate needs an integer scale >= 1, got {s!r}")
    s = int(s)
    rows = []
    with T.stage("hypernetwork"):
        for i in range(s):
            for j in range(s):
                rows.append(kernel_full(head.field, (i / s, j / s), (s, s)).data)
    return InstantiatedKernels(s=s, weights=np.stack(rows))


def decode_instantiated(head, kernels, features_lr):
    """Decode raw (not unfolded) LR features with a discrete kernel bank.

    Runs the s^2 grouped depthwise convolutions on the LR grid, pixel
    shuffles to the target grid, then applies the pointwise layers.  For
    integer s this matches decode_continuous on the full target grid.
    """
    cfg = head.config
    c, k, s = cfg.channels, cfg.kernel, kernels.s
    if features_lr.shape[2] != c:
        raise T.ShapeError(
            f"expected raw features with {c} channels, got {features_lr.shape}")
    with T.stage("depthwise"):
        per_offset = []
        for o in range(s * s):
            w = T.Tensor(np.ascontiguousarray(kernels.weights[o].T).reshape(c, k, k))
            per_offset.append(T.depthwise_conv2d(features_lr, w))
        # [H, W, s^2 * C] with offset-major layout, rearranged to the
        # c*s^2 + o layout pixel_shuffle expects.
        stacked = T.concat_last(per_offset)
        h, w_ = features_lr.shape[0], features_lr.shape[1]
        stacked = T.reshape(stacked, (h, w_, s * s, c))
        stacked = T.transpose_last2(stacked)
        stacked = T.reshape(stacked, (h, w_, c * s * s))
        shuffled = T.pixel_shuffle(stacked, s)
    rgb = head.project(shuffled)
    return rgb
