import numpy as np
import pytest

from cufsr import encoder
from cufsr import tensor as T

from _oracles import naive_conv2d


def _params(cfg, seed=0):
    return encoder.init_encoder_params(cfg, np.random.default_rng(seed))


def test_shapes_and_param_names():
    cfg = encoder.EncoderConfig(channels=8, blocks=2)
    params = _params(cfg)
    expected = {"head.w", "head.b", "tail.w", "tail.b"}
    for i in range(2):
        expected |= {f"block{i}.conv0.w", f"block{i}.conv0.b",
                     f"block{i}.conv1.w", f"block{i}.conv1.b"}
    assert set(params.names()) == expected
    x = T.Tensor(np.random.default_rng(1).random((6, 7, 3)).astype(np.float32))
    out = encoder.encode(cfg, params, x)
    assert out.shape == (6, 7, 8)


def test_encode_matches_naive_reference(rng):
    cfg = encoder.EncoderConfig(channels=4, blocks=1)
    params = _params(cfg)
    img = rng.random((5, 6, 3)).astype(np.float32)

    def w(name):
        return params[name + ".w"].value.data, params[name + ".b"].value.data

    hw, hb = w("head")
    h = naive_conv2d(img, hw, hb)
    c0w, c0b = w("block0.conv0")
    c1w, c1b = w("block0.conv1")
    r = np.maximum(naive_conv2d(h, c0w, c0b), 0.0)
    x = naive_conv2d(r, c1w, c1b) + h
    tw, tb = w("tail")
    ref = naive_conv2d(x, tw, tb) + h

    got = encoder.encode(cfg, params, T.Tensor(img)).data
    np.testing.assert_allclose(got, ref, rtol=1e-4, atol=1e-4)


def test_featurize_is_unfolded_encode(rng):
    cfg = encoder.EncoderConfig(channels=4, blocks=1)
    params = _params(cfg)
    img = T.Tensor(rng.random((5, 5, 3)).astype(np.float32))
    feats = encoder.encode(cfg, params, img)
    unfolded = encoder.featurize(cfg, params, img, 3)
    assert unfolded.shape == (5, 5, 4 * 9)
    np.testing.assert_array_equal(
        unfolded.data, T.unfold(feats, 3).data)
    # k = 1 skips the unfold entirely
    np.testing.assert_array_equal(
        encoder.featurize(cfg, params, img, 1).data, feats.data)


def test_encoder_stage_attribution(rng):
    cfg = encoder.EncoderConfig(channels=4, blocks=2)
    params = _params(cfg)
    img = T.Tensor(rng.random((5, 6, 3)).astype(np.float32))
    with T.MultCounter() as counter:
        encoder.encode(cfg, params, img)
    expected = 5 * 6 * 9 * (3 * 4 + 2 * 2 * 16 + 16)
    assert counter.by_stage == {"encoder": expected}


def test_invalid_config_rejected():
    with pytest.raises(ValueError):
        encoder.EncoderConfig(channels=2)
    with pytest.raises(ValueError):
        encoder.EncoderConfig(blocks=0)
