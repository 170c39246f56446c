"""Independent reference implementations used as test oracles.

Everything here is deliberately written the slow, obvious way (per-pixel
python loops, no shared code with the package internals) so disagreement
points at the implementation, not the test.
"""

import math

import numpy as np


def naive_conv2d(x, w, b=None):
    """Per-pixel loop conv, zero padding, [H,W,Cin] x [Cout,Cin,K,K]."""
    h, wd, cin = x.shape
    cout, _, k, _ = w.shape
    p = (k - 1) // 2
    y = np.zeros((h, wd, cout), dtype=np.float64)
    for i in range(h):
        for j in range(wd):
            for co in range(cout):
                acc = 0.0
                for ci in range(cin):
                    for ki in range(k):
                        for kj in range(k):
                            ii, jj = i + ki - p, j + kj - p
                            if 0 <= ii < h and 0 <= jj < wd:
                                acc += float(x[ii, jj, ci]) * float(w[co, ci, ki, kj])
                y[i, j, co] = acc + (float(b[co]) if b is not None else 0.0)
    return y


def naive_depthwise(x, w):
    """Per-pixel loop depthwise conv, zero padding, [H,W,C] x [C,K,K]."""
    h, wd, c = x.shape
    _, k, _ = w.shape
    p = (k - 1) // 2
    y = np.zeros((h, wd, c), dtype=np.float64)
    for i in range(h):
        for j in range(wd):
            for ch in range(c):
                acc = 0.0
                for ki in range(k):
                    for kj in range(k):
                        ii, jj = i + ki - p, j + kj - p
                        if 0 <= ii < h and 0 <= jj < wd:
                            acc += float(x[ii, jj, ch]) * float(w[ch, ki, kj])
                y[i, j, ch] = acc
    return y


def cubic_kernel(x, a=-0.5):
    x = abs(x)
    if x <= 1.0:
        return (a + 2) * x ** 3 - (a + 3) * x ** 2 + 1
    if x < 2.0:
        return a * x ** 3 - 5 * a * x ** 2 + 8 * a * x - 4 * a
    return 0.0


def naive_bicubic(image, s_h, s_w=None, antialias=True):
    """Brute-force separable bicubic resampler (edge clamp, normalized)."""
    if s_w is None:
        s_w = s_h
    h, w, c = image.shape
    oh, ow = int(math.floor(s_h * h)), int(math.floor(s_w * w))
    out = np.zeros((oh, ow, c), dtype=np.float64)
    img = image.astype(np.float64)

    def axis_samples(o, scale, n_in):
        u = (o + 0.5) / scale - 0.5
        widen = 1.0 / scale if (antialias and scale < 1.0) else 1.0
        support = 2.0 * widen
        taps = int(math.ceil(support)) * 2 + 1
        left = int(math.floor(u - support)) + 1
        pairs = []
        for t in range(taps):
            idx = left + t
            wgt = cubic_kernel((u - idx) / widen)
            pairs.append((min(max(idx, 0), n_in - 1), wgt))
        total = sum(p[1] for p in pairs)
        return [(i, wg / total) for i, wg in pairs]

    for oy in range(oh):
        ys = axis_samples(oy, s_h, h)
        for ox in range(ow):
            xs = axis_samples(ox, s_w, w)
            for ch in range(c):
                acc = 0.0
                for iy, wy in ys:
                    for ix, wx in xs:
                        acc += wy * wx * img[iy, ix, ch]
                out[oy, ox, ch] = acc
    return out


def mlp_forward(x, weights, biases):
    """Straight-line MLP: ReLU after every layer except the last."""
    x = np.asarray(x, dtype=np.float64)
    for i, (w, b) in enumerate(zip(weights, biases)):
        x = x @ np.asarray(w, dtype=np.float64) + np.asarray(b, dtype=np.float64)
        if i < len(weights) - 1:
            x = np.maximum(x, 0.0)
    return x


def decode_reference(model, image, s_h, s_w):
    """Materialized per-pixel decode: no query dedup, no fancy gathers.

    Re-runs the entire head in float64 numpy from the stored weights; only
    the encoder output is taken from the package (its own oracle lives in
    the encoder tests).
    """
    from cufsr import posenc
    from cufsr import tensor as T

    cfg = model.head_config.field
    c, k = cfg.channels, cfg.kernel
    feats = model.features(T.Tensor(np.asarray(image, dtype=np.float32)),
                           unfolded=False).data.astype(np.float64)
    h, w = feats.shape[0], feats.shape[1]
    th, tw = int(math.floor(s_h * h)), int(math.floor(s_w * w))
    p = model.params

    def layer(name):
        return (p[f"head.field.{name}.w"].value.data,
                p[f"head.field.{name}.b"].value.data)

    field_w = [layer(f"l{i}")[0] for i in range(4)]
    field_b = [layer(f"l{i}")[1] for i in range(4)]
    d1w, d1b = p["head.dense1.w"].value.data, p["head.dense1.b"].value.data
    d2w, d2b = p["head.dense2.w"].value.data, p["head.dense2.b"].value.data
    denom = (k - 1) if k > 1 else 1
    pad = (k - 1) // 2
    out = np.zeros((th, tw, 3), dtype=np.float64)
    for ty in range(th):
        for tx in range(tw):
            sy, sx = math.floor(ty / s_h), math.floor(tx / s_w)
            dy = round(ty / s_h - sy, 9)
            dx = round(tx / s_w - sx, 9)
            mixed = np.zeros(c, dtype=np.float64)
            for ki in range(k):
                for kj in range(k):
                    e = np.concatenate([
                        posenc.encode_2d(np.array([dy]), np.array([dx]), cfg.enc_delta),
                        posenc.encode_2d(np.array([1.0 / s_h]), np.array([1.0 / s_w]),
                                         cfg.enc_scale),
                        posenc.encode_2d(np.array([ki / denom]), np.array([kj / denom]),
                                         cfg.enc_kidx),
                    ], axis=-1).astype(np.float32)
                    kern = mlp_forward(e, field_w, field_b)[0]
                    iy, ix = sy + ki - pad, sx + kj - pad
                    if 0 <= iy < h and 0 <= ix < w:
                        mixed += kern * feats[iy, ix]
            hidden = np.maximum(mixed @ d1w + d1b, 0.0)
            out[ty, tx] = hidden @ d2w + d2b
    return out
