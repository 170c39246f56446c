"""Sub-pixel convolution upsampling head (the fixed-scale baseline).

Expansion conv to s^2 * N_out channels, periodic shuffle, pointwise
projection to RGB.  N_out defaults to the encoder channel count; all cost
comparisons use that configuration.
"""

from dataclasses import dataclass

import numpy as np

from . import tensor as T


@dataclass(frozen=True)
class SubPixelConfig:
    channels: int = 64      # encoder features C
    scale: int = 2
    kernel: int = 3
    n_out: int = None       # post-shuffle feature channels; None -> channels

    def __post_init__(self):
        if self.n_out is None:
            object.__setattr__(self, "n_out", self.channels)
        if self.scale < 1:
            raise ValueError("scale must be >= 1")


class SubPixelHead:
    def __init__(self, config, rng=None, params=None, prefix="head."):
        self.config = config
        self.prefix = prefix
        c, s, k, n = config.channels, config.scale, config.kernel, config.n_out
        if params is None:
            params = T.ParameterSet()
            fan = c * k * k
            params.add(prefix + "expand.w",
                       T.uniform_init(rng, (s * s * n, c, k, k), fan))
            params.add(prefix + "expand.b", T.uniform_init(rng, (s * s * n,), fan))
            params.add(prefix + "proj.w", T.uniform_init(rng, (n, 3), n))
            params.add(prefix + "proj.b", T.uniform_init(rng, (3,), n))
        self.params = params


def subpixel_forward(head, features):
    """[H,W,C] features -> [sH,sW,3] via expansion conv + periodic shuffle."""
    cfg = head.config
    p = head.prefix
    with T.stage("expansion"):
        x = T.conv2d(features, head.params[p + "expand.w"].value,
                     head.params[p + "expand.b"].value)
        x = T.pixel_shuffle(x, cfg.scale)
    with T.stage("dense"):
        return T.dense(x, head.params[p + "proj.w"].value,
                       head.params[p + "proj.b"].value)


def subpixel_param_count(c, s, k, n_out, include_projection=False):
    """Expansion weights + biases (optionally plus the RGB projection)."""
    count = c * k * k * s * s * n_out + s * s * n_out
    if include_projection:
        count += n_out * 3 + 3
    return count
