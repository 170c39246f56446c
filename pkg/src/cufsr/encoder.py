"""Toy residual convolutional encoder (EDSR-style at desk scale).

Head conv 3->C, B residual blocks (conv-ReLU-conv + identity skip), tail
conv C->C with a global skip from the head output.  Spatial size is
preserved throughout.  No mean-shift layers: inputs are already in [0, 1].
"""

from dataclasses import dataclass

import numpy as np

from . import tensor as T


@dataclass(frozen=True)
class EncoderConfig:
    channels: int = 64
    blocks: int = 4
    kernel: int = 3

    def __post_init__(self):
        if self.channels < 3:
            raise ValueError("channels must be >= 3")
        if self.blocks < 1:
            raise ValueError("blocks must be >= 1")


def init_encoder_params(config, rng, params=None, prefix=""):
    """Deterministic uniform(-1/sqrt(fan_in), ..) init into a ParameterSet."""
    if params is None:
        params = T.ParameterSet()
    c, k = config.channels, config.kernel

    def conv(name, cin, cout):
        fan = cin * k * k
        params.add(prefix + name + ".w", T.uniform_init(rng, (cout, cin, k, k), fan))
        params.add(prefix + name + ".b", T.uniform_init(rng, (cout,), fan))

    conv("head", 3, c)
    for i in range(config.blocks):
        conv(f"block{i}.conv0", c, c)
        conv(f"block{i}.conv1", c, c)
    conv("tail", c, c)
    return params


def encode(config, params, image, prefix=""):
    """[H,W,3] image tensor -> [H,W,C] features."""

    def conv(name, x):
        return T.conv2d(x, params[prefix + name + ".w"].value,
                        params[prefix + name + ".b"].value)

    with T.stage("encoder"):
        h = conv("head", image)
        x = h
        for i in range(config.blocks):
            r = T.relu(conv(f"block{i}.conv0", x))
            x = T.add(conv(f"block{i}.conv1", r), x)
        return T.add(conv("tail", x), h)


def featurize(config, params, image, k, prefix=""):
    """Encode then unfold a k x k neighborhood: [H,W,C] -> [H,W,C*k*k].

    The nearest-neighbour sampling onto the target grid happens lazily in
    the decoder via source-index lookup, so the target-resolution tensor is
    never materialized here.
    """
    feats = encode(config, params, image, prefix)
    if k == 1:
        return feats
    return T.unfold(feats, k)
